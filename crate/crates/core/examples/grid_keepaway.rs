//! Two-versus-two keep-away on a grid: train briefly and score checkpoints
//! against the scripted bot from both seats.

use fm3q::eval::{vs_bot_curve, Contestant, MatchConfig};
use fm3q::games::{grid_keepaway_game, GridConfig};
use fm3q::learner::{extract_policies, train, GreedyPolicyPair, MixerSpec, TrainConfig};

fn main() -> fm3q::Result<()> {
    let game = grid_keepaway_game(&GridConfig::new(5))?;
    let config = TrainConfig {
        episodes: 60,
        hidden: vec![32],
        mixer: MixerSpec::hyper(16),
        learning_rate: 1e-3,
        checkpoint_every: Some(20),
        ..TrainConfig::default()
    };
    let out = train(&game, &config)?;
    let pairs: Vec<GreedyPolicyPair> = out.checkpoints.iter().map(|(_, m)| extract_policies(m.clone())).collect();
    let cohort: Vec<Contestant> = out
        .checkpoints
        .iter()
        .zip(&pairs)
        .map(|((ep, _), p)| Contestant::new("fm3q", *ep, p))
        .collect();
    for point in vs_bot_curve(&game, &cohort, &MatchConfig::default(), 0)? {
        println!("episode {:3}: mean return vs bot {:+.3} over {} episodes", point.episode, point.value, point.matches);
    }
    Ok(())
}
