use serde::{Deserialize, Serialize};

use super::{loss, select_actions, BufferSpec, Coordinator, Fm3qTopology, MixerSpec, NeuralFactorizedQ, ReplayBuffer, RoundRecord};
use crate::error::{Error, Result};
use crate::games::{reset, step, EpisodeStep, TwoTeamGame};
use crate::numerics::{adam_step, AdamState, DEFAULT_LEARNING_RATE};
use crate::seeded_rng;

/// Random streams derived from the training seed.
const STREAM_INIT: u64 = 0;
const STREAM_ROLLOUT: u64 = 1;
const STREAM_BATCH: u64 = 2;

/// Linear decay from `start` to `end` over the first `decay_fraction` of the
/// episodes, then constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpsilonSchedule {
    pub start: f64,
    pub end: f64,
    pub decay_fraction: f64,
}

impl Default for EpsilonSchedule {
    fn default() -> Self {
        Self {
            start: 1.0,
            end: 0.05,
            decay_fraction: 0.2,
        }
    }
}

impl EpsilonSchedule {
    /// Exploration has to stay positive so every (s, a, b) keeps being
    /// visited.
    pub fn validate(&self) -> Result<()> {
        let ok = self.end > 0.0
            && self.end <= self.start
            && self.start <= 1.0
            && (0.0..=1.0).contains(&self.decay_fraction);
        if !ok {
            return Err(Error::Config(format!(
                "epsilon schedule {self:?} must satisfy 0 < end ≤ start ≤ 1 and decay_fraction ∈ [0, 1]"
            )));
        }
        Ok(())
    }

    pub fn at(&self, episode: usize, total: usize) -> f64 {
        let decay = (self.decay_fraction * total as f64).ceil();
        if decay <= 0.0 {
            return self.end;
        }
        let t = episode as f64 / decay;
        if t >= 1.0 {
            return self.end;
        }
        self.start + (self.end - self.start) * t
    }
}

fn default_hidden() -> Vec<usize> {
    vec![64, 64]
}

fn default_lr() -> f64 {
    DEFAULT_LEARNING_RATE
}

fn default_updates() -> usize {
    10
}

fn default_window() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub episodes: usize,
    #[serde(default = "default_hidden")]
    pub hidden: Vec<usize>,
    #[serde(default)]
    pub mixer: MixerSpec,
    #[serde(default = "default_lr")]
    pub learning_rate: f64,
    #[serde(default)]
    pub buffer: BufferSpec,
    /// U: optimizer steps per round before the target refresh.
    #[serde(default = "default_updates")]
    pub updates_per_round: usize,
    #[serde(default)]
    pub epsilon: EpsilonSchedule,
    /// History window k.
    #[serde(default = "default_window")]
    pub window: usize,
    #[serde(default)]
    pub seed: u64,
    /// Keep a model snapshot every this many episodes.
    #[serde(default)]
    pub checkpoint_every: Option<usize>,
    /// Call the evaluation hook every this many episodes (and after the last).
    #[serde(default)]
    pub eval_every: Option<usize>,
    /// Cross-check every TD target against exhaustive enumeration.
    #[serde(default)]
    pub check_targets: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            episodes: 1000,
            hidden: default_hidden(),
            mixer: MixerSpec::default(),
            learning_rate: DEFAULT_LEARNING_RATE,
            buffer: BufferSpec::full(),
            updates_per_round: default_updates(),
            epsilon: EpsilonSchedule::default(),
            window: 1,
            seed: 0,
            checkpoint_every: None,
            eval_every: None,
            check_targets: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        self.epsilon.validate()?;
        self.buffer.limit()?;
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!("learning rate {} must be positive", self.learning_rate)));
        }
        if self.updates_per_round == 0 || self.window == 0 {
            return Err(Error::Config("updates_per_round and window must be at least 1".into()));
        }
        if self.checkpoint_every == Some(0) || self.eval_every == Some(0) {
            return Err(Error::Config("cadences must be at least 1".into()));
        }
        Ok(())
    }
}

/// Per-episode training metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub episode: usize,
    /// Mean loss over the round's updates.
    pub loss: f64,
    pub epsilon: f64,
    pub buffer_size: usize,
    pub batch_size: usize,
    pub nashconv: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: NeuralFactorizedQ,
    pub metrics: Vec<MetricsRow>,
    /// (episodes completed, snapshot).
    pub checkpoints: Vec<(usize, NeuralFactorizedQ)>,
    pub rounds: Vec<RoundRecord>,
    pub total_steps: usize,
}

/// Online training without an evaluation hook.
pub fn train<G: TwoTeamGame + ?Sized>(game: &G, config: &TrainConfig) -> Result<TrainOutcome> {
    train_with(game, config, |_, _| Ok(None))
}

/// Online training. Each episode is rolled out ε-greedily and stored; then U
/// batches of size max(1, ⌊L/U⌋) each take one Adam step on the squared TD
/// error, and the target parameters are refreshed. `eval(episodes_done,
/// model)` fills the metrics' nashconv column at the evaluation cadence.
pub fn train_with<G, F>(game: &G, config: &TrainConfig, mut eval: F) -> Result<TrainOutcome>
where
    G: TwoTeamGame + ?Sized,
    F: FnMut(usize, &NeuralFactorizedQ) -> Result<Option<f64>>,
{
    config.validate()?;
    let topology = Fm3qTopology::for_game(game, config.window, &config.hidden, config.mixer);
    let mut model = NeuralFactorizedQ::new(topology, &mut seeded_rng(config.seed, STREAM_INIT))?;
    let mut rollout_rng = seeded_rng(config.seed, STREAM_ROLLOUT);
    let mut batch_rng = seeded_rng(config.seed, STREAM_BATCH);
    let mut target = model.params().values().to_vec();
    let mut adam = AdamState::new(target.len());
    let mut buffer: ReplayBuffer<EpisodeStep> = ReplayBuffer::new(config.buffer)?;
    let mut coordinator = Coordinator::new(config.updates_per_round)?;
    let gamma = game.gamma();
    let m = config.episodes;
    let mut metrics = Vec::with_capacity(m);
    let mut checkpoints = Vec::new();
    let mut total_steps = 0;

    for episode in 0..m {
        let epsilon = config.epsilon.at(episode, m);
        let mut state = reset(game, config.window, &mut rollout_rng);
        loop {
            let action = select_actions(&model, &state, epsilon, &mut rollout_rng)?;
            let st = step(game, &state, &action, &mut rollout_rng)?;
            total_steps += 1;
            let done = st.done;
            state = st.next_state.clone();
            buffer.push(st);
            if done {
                break;
            }
        }

        let len = buffer.len();
        let plan = coordinator.plan(len, &mut batch_rng);
        let mut loss_sum = 0.0;
        for batch in &plan {
            let refs: Vec<&EpisodeStep> = batch.iter().map(|&i| buffer.get(i).expect("planned index in range")).collect();
            if config.check_targets {
                for st in &refs {
                    super::td_target_checked(model.net(), &target, st, gamma)?;
                }
            }
            let out = loss(model.net(), model.params().values(), &target, &refs, gamma)?;
            adam_step(model.params_mut().values_mut(), &out.grad, &mut adam, config.learning_rate)?;
            loss_sum += out.loss;
        }
        coordinator.refresh(episode, len, plan.len(), model.params().values(), &mut target);

        let done_count = episode + 1;
        let nashconv = match config.eval_every {
            Some(k) if done_count % k == 0 || done_count == m => eval(done_count, &model)?,
            _ => None,
        };
        metrics.push(MetricsRow {
            episode,
            loss: if plan.is_empty() { 0.0 } else { loss_sum / plan.len() as f64 },
            epsilon,
            buffer_size: len,
            batch_size: coordinator.batch_size(len),
            nashconv,
        });
        if let Some(k) = config.checkpoint_every {
            if done_count % k == 0 {
                checkpoints.push((done_count, model.clone()));
            }
        }
        log::debug!("episode {episode}: buffer {len}, epsilon {epsilon:.3}");
    }

    Ok(TrainOutcome {
        model,
        metrics,
        checkpoints,
        rounds: coordinator.into_rounds(),
        total_steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::{matrix_team_game, random_tabular_game, PayoffTensor, RandomGameSpec};

    fn small_config(episodes: usize) -> TrainConfig {
        TrainConfig {
            episodes,
            hidden: vec![8],
            mixer: MixerSpec::hyper(4),
            learning_rate: 5e-3,
            checkpoint_every: Some(5),
            ..TrainConfig::default()
        }
    }

    #[test]
    fn schedule_decays_linearly_then_holds() {
        let s = EpsilonSchedule::default();
        assert_eq!(s.at(0, 100), 1.0);
        assert!((s.at(10, 100) - 0.525).abs() < 1e-12);
        assert_eq!(s.at(20, 100), 0.05);
        assert_eq!(s.at(99, 100), 0.05);
    }

    #[test]
    fn zero_exploration_is_refused() {
        let game = matrix_team_game(&PayoffTensor::from_matrix(&[vec![1.0]]), 1, 1).unwrap();
        let mut config = small_config(1);
        config.epsilon.end = 0.0;
        assert!(matches!(train(&game, &config), Err(Error::Config(_))));
    }

    #[test]
    fn zero_episodes_returns_the_initial_model() {
        let game = random_tabular_game(&RandomGameSpec::new(0, 2, 1, 1, 2, 0.5)).unwrap();
        let out = train(&game, &small_config(0)).unwrap();
        assert!(out.metrics.is_empty());
        let topo = Fm3qTopology::for_game(&game, 1, &[8], MixerSpec::hyper(4));
        let fresh = NeuralFactorizedQ::new(topo, &mut seeded_rng(0, STREAM_INIT)).unwrap();
        assert_eq!(out.model.params(), fresh.params());
    }

    #[test]
    fn rounds_follow_the_coordinator_rule() {
        let game = random_tabular_game(&RandomGameSpec::new(1, 3, 2, 2, 2, 0.5).horizon(7)).unwrap();
        let out = train(&game, &small_config(12)).unwrap();
        assert_eq!(out.total_steps, 12 * 7);
        for (k, r) in out.rounds.iter().enumerate() {
            assert_eq!(r.buffer_len, 7 * (k + 1));
            assert_eq!(r.updates, 10);
            assert_eq!(r.batch_size, (r.buffer_len / 10).max(1));
            assert!(r.target_synced);
        }
        assert_eq!(out.checkpoints.iter().map(|c| c.0).collect::<Vec<_>>(), vec![5, 10]);
    }

    #[test]
    fn training_is_deterministic() {
        let game = random_tabular_game(&RandomGameSpec::new(2, 2, 1, 1, 2, 0.5)).unwrap();
        let a = train(&game, &small_config(6)).unwrap();
        let b = train(&game, &small_config(6)).unwrap();
        assert_eq!(a.metrics, b.metrics);
        assert_eq!(a.model.params(), b.model.params());
    }

    #[test]
    fn checked_targets_pass_for_monotone_mixers() {
        let game = random_tabular_game(&RandomGameSpec::new(3, 2, 2, 2, 2, 0.5).horizon(3)).unwrap();
        let config = TrainConfig {
            check_targets: true,
            ..small_config(4)
        };
        train(&game, &config).unwrap();
    }
}
