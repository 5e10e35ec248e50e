//! Train FM3Q online on a small deterministic game and track exact NashConv.
//!
//!     cargo run --release --example train_fm3q -- [episodes] [seed]

use fm3q::games::{random_tabular_game, RandomGameSpec, Team};
use fm3q::learner::{extract_policies, tabulate_policy, train_with, MixerSpec, TrainConfig};
use fm3q::oracle::nashconv;

fn main() -> fm3q::Result<()> {
    let mut args = std::env::args().skip(1);
    let episodes = args.next().and_then(|a| a.parse().ok()).unwrap_or(300);
    let seed = args.next().and_then(|a| a.parse().ok()).unwrap_or(0);

    let game = random_tabular_game(&RandomGameSpec::new(1275, 4, 2, 2, 2, 0.5).deterministic())?;
    let config = TrainConfig {
        episodes,
        hidden: vec![32],
        mixer: MixerSpec::hyper(16),
        learning_rate: 2e-3,
        seed,
        eval_every: Some((episodes / 10).max(1)),
        ..TrainConfig::default()
    };
    let out = train_with(&game, &config, |_, model| {
        let pair = extract_policies(model.clone());
        let pro = tabulate_policy(&pair, &game, Team::Pro, 1)?;
        let ant = tabulate_policy(&pair, &game, Team::Ant, 1)?;
        Ok(Some(nashconv(&game, &pro, &ant, 1e-10)?))
    })?;

    println!("{:>8} {:>10} {:>8} {:>8} {:>10}", "episode", "loss", "eps", "buffer", "nashconv");
    for row in out.metrics.iter().filter(|r| r.nashconv.is_some()) {
        println!(
            "{:>8} {:>10.5} {:>8.3} {:>8} {:>10.4}",
            row.episode,
            row.loss,
            row.epsilon,
            row.buffer_size,
            row.nashconv.unwrap()
        );
    }
    println!("{} environment steps, {} target refreshes", out.total_steps, out.rounds.len());
    Ok(())
}
