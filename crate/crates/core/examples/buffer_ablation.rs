//! Train with small, large and never-evicting replay buffers on shared seeds
//! and compare the final models head to head.

use fm3q::eval::{ablate_buffer, AblationSizes, MatchConfig, ABLATION_LABELS};
use fm3q::games::{random_tabular_game, RandomGameSpec, TwoTeamGame};
use fm3q::learner::{MixerSpec, TrainConfig};

fn main() -> fm3q::Result<()> {
    let game = random_tabular_game(&RandomGameSpec::new(1275, 4, 2, 2, 2, 0.5).deterministic())?;
    let config = TrainConfig {
        episodes: 150,
        hidden: vec![32],
        mixer: MixerSpec::hyper(16),
        learning_rate: 2e-3,
        checkpoint_every: Some(30),
        ..TrainConfig::default()
    };
    let steps = config.episodes * game.horizon();
    let sizes = AblationSizes {
        small: steps / 20,
        large: steps / 4,
    };
    let out = ablate_buffer(&game, sizes, &config, &[0, 1, 2], &MatchConfig::default())?;
    println!("capacities: small {} large {} full {steps}", sizes.small, sizes.large);
    for s in &out.seeds {
        print!("seed {}:", s.seed);
        for (k, label) in ABLATION_LABELS.iter().enumerate() {
            let trend = s.trend[k].as_ref().map_or(f64::NAN, |t| t.fraction_later_beats_earlier);
            print!("  {label} rr {:.2} trend {:.2}", s.final_rr[k], trend);
        }
        println!("  ordered {}", s.ordered());
    }
    Ok(())
}
