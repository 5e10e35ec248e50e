//! Play a run's checkpoints against each other and measure whether later
//! models beat earlier ones.

use fm3q::eval::{optimization_trend, round_robin, Contestant, MatchConfig};
use fm3q::games::{random_tabular_game, RandomGameSpec};
use fm3q::learner::{extract_policies, train, GreedyPolicyPair, MixerSpec, TrainConfig};

fn main() -> fm3q::Result<()> {
    let game = random_tabular_game(&RandomGameSpec::new(1275, 4, 2, 2, 2, 0.5).deterministic())?;
    let config = TrainConfig {
        episodes: 200,
        hidden: vec![32],
        mixer: MixerSpec::hyper(16),
        learning_rate: 2e-3,
        checkpoint_every: Some(25),
        ..TrainConfig::default()
    };
    let out = train(&game, &config)?;
    let pairs: Vec<GreedyPolicyPair> = out.checkpoints.iter().map(|(_, m)| extract_policies(m.clone())).collect();
    let labels: Vec<String> = out.checkpoints.iter().map(|(ep, _)| format!("ep{ep}")).collect();
    let cohort: Vec<Contestant> = out
        .checkpoints
        .iter()
        .zip(&pairs)
        .zip(&labels)
        .map(|(((ep, _), p), l)| Contestant::new(l, *ep, p))
        .collect();

    let rr = round_robin(&game, &cohort, &MatchConfig::default(), 0)?;
    print!("{}", rr.table.to_csv()?);
    for e in &rr.returns {
        println!("{:>6}  raw {:+.4}  normalized {:.3}", e.label, e.raw, e.normalized);
    }
    let trend = optimization_trend(&rr.table)?;
    println!(
        "later beats earlier in {:.3} of {} cells ({} violations)",
        trend.fraction_later_beats_earlier, trend.cells, trend.violations
    );
    Ok(())
}
