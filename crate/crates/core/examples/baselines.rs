//! Compare FM3Q with independent Q-learning and tabular joint minimax-Q on
//! the same game and budget.

use fm3q::baselines::{selfplay_independent_train, train_joint_minimax, AlphaSchedule, JointMinimaxConfig};
use fm3q::games::{random_tabular_game, RandomGameSpec, TabularGame, Team};
use fm3q::learner::{extract_policies, tabulate_policy, train, EpsilonSchedule, MixerSpec, TeamPolicy, TrainConfig};
use fm3q::oracle::nashconv;

fn exploitability(game: &TabularGame, policy: &dyn TeamPolicy) -> fm3q::Result<f64> {
    let pro = tabulate_policy(policy, game, Team::Pro, 1)?;
    let ant = tabulate_policy(policy, game, Team::Ant, 1)?;
    nashconv(game, &pro, &ant, 1e-10)
}

fn main() -> fm3q::Result<()> {
    let game = random_tabular_game(&RandomGameSpec::new(1275, 4, 2, 2, 2, 0.5).deterministic())?;
    let episodes = 200;
    let config = TrainConfig {
        episodes,
        hidden: vec![32],
        mixer: MixerSpec::hyper(16),
        learning_rate: 2e-3,
        ..TrainConfig::default()
    };
    for seed in 0..3 {
        let cfg = TrainConfig { seed, ..config.clone() };
        let fm3q = train(&game, &cfg)?;
        let iql = selfplay_independent_train(&game, &cfg)?;
        let joint = train_joint_minimax(
            &game,
            &JointMinimaxConfig {
                episodes,
                alpha: AlphaSchedule::default(),
                epsilon: EpsilonSchedule::default(),
                seed,
                checkpoint_every: None,
            },
        )?;
        println!(
            "seed {seed}: nashconv fm3q {:.4}  iql {:.4}  joint minimax-q {:.4}",
            exploitability(&game, &extract_policies(fm3q.model))?,
            exploitability(&game, &iql.model)?,
            exploitability(&game, &joint.learner)?
        );
    }
    Ok(())
}
