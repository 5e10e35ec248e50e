use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::games::{sample_support, AugmentedState, TabularGame, Team, TwoTeamGame};
use crate::learner::{EpsilonSchedule, TabularTransition, TeamPolicy};
use crate::oracle::min_max;
use crate::seeded_rng;

const STREAM_ROLLOUT: u64 = 1;

/// Centralized minimax-Q over the joint table Q(s, a, b), indexed by global
/// state and joint action indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointMinimaxQLearner {
    pub n_states: usize,
    pub pro_actions: Vec<usize>,
    pub ant_actions: Vec<usize>,
    /// [s][a][b]
    pub table: Vec<f64>,
    /// Update count per (s, a, b).
    pub visits: Vec<u64>,
}

impl JointMinimaxQLearner {
    pub fn zeros(n_states: usize, pro_actions: &[usize], ant_actions: &[usize]) -> Self {
        let na: usize = pro_actions.iter().product();
        let nb: usize = ant_actions.iter().product();
        Self {
            n_states,
            pro_actions: pro_actions.to_vec(),
            ant_actions: ant_actions.to_vec(),
            table: vec![0.0; n_states * na * nb],
            visits: vec![0; n_states * na * nb],
        }
    }

    pub fn for_game(game: &TabularGame) -> Self {
        Self::zeros(game.n_states(), game.pro_action_counts(), game.ant_action_counts())
    }

    pub fn joint_sizes(&self) -> (usize, usize) {
        (self.pro_actions.iter().product(), self.ant_actions.iter().product())
    }

    pub fn state_matrix(&self, state: usize) -> &[f64] {
        let (na, nb) = self.joint_sizes();
        &self.table[state * na * nb..(state + 1) * na * nb]
    }

    /// min_b max_a Q(s, a, b).
    pub fn value(&self, state: usize) -> f64 {
        let (na, nb) = self.joint_sizes();
        min_max(self.state_matrix(state), na, nb).value
    }

    /// Joint index per state: Pro plays argmax_a min_b, Ant argmin_b max_a.
    pub fn policies(&self) -> (Vec<usize>, Vec<usize>) {
        let (na, nb) = self.joint_sizes();
        (0..self.n_states)
            .map(|s| {
                let q = self.state_matrix(s);
                (crate::oracle::max_min(q, na, nb).pro, min_max(q, na, nb).ant)
            })
            .unzip()
    }

    fn check(&self, t: &TabularTransition) -> Result<usize> {
        let (na, nb) = self.joint_sizes();
        if t.state >= self.n_states || t.next_state >= self.n_states || t.pro >= na || t.ant >= nb {
            return Err(Error::Dimension(format!(
                "transition ({}, {}, {}) → {} outside a {}×{na}×{nb} table",
                t.state, t.pro, t.ant, t.next_state, self.n_states
            )));
        }
        Ok((t.state * na + t.pro) * nb + t.ant)
    }
}

impl TeamPolicy for JointMinimaxQLearner {
    fn act(&self, state: &AugmentedState, team: Team) -> Result<Vec<usize>> {
        if state.state >= self.n_states {
            return Err(Error::PolicyNotTotal(format!("state {} outside the table", state.state)));
        }
        let (na, nb) = self.joint_sizes();
        let q = self.state_matrix(state.state);
        Ok(match team {
            Team::Pro => decode(&self.pro_actions, crate::oracle::max_min(q, na, nb).pro),
            Team::Ant => decode(&self.ant_actions, min_max(q, na, nb).ant),
        })
    }
}

fn decode(counts: &[usize], index: usize) -> Vec<usize> {
    crate::games::JointSpace::new(counts).decode(index)
}

/// Q(s,a,b) ← (1−α)·Q(s,a,b) + α·(r + γ·min_b′ max_a′ Q(s′,·,·)); the
/// bootstrap term is dropped on terminal transitions.
pub fn joint_minimaxq_update(learner: &mut JointMinimaxQLearner, t: &TabularTransition, alpha: f64, gamma: f64) -> Result<()> {
    let idx = learner.check(t)?;
    let target = if t.done || gamma == 0.0 {
        t.reward
    } else {
        t.reward + gamma * learner.value(t.next_state)
    };
    if alpha != 0.0 {
        learner.table[idx] = (1.0 - alpha) * learner.table[idx] + alpha * target;
    }
    learner.visits[idx] += 1;
    Ok(())
}

/// Step size for an entry already updated `visits` times.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum AlphaSchedule {
    Constant { alpha: f64 },
    /// α / (visits + 1)^ω.
    Polynomial { alpha: f64, omega: f64 },
}

impl AlphaSchedule {
    pub fn validate(&self) -> Result<()> {
        let (alpha, ok) = match *self {
            AlphaSchedule::Constant { alpha } => (alpha, true),
            AlphaSchedule::Polynomial { alpha, omega } => (alpha, omega > 0.5 && omega <= 1.0),
        };
        if !(alpha > 0.0 && alpha <= 1.0) || !ok {
            return Err(Error::Config(format!("step size schedule {self:?} needs α ∈ (0,1] and ω ∈ (0.5,1]")));
        }
        Ok(())
    }

    pub fn at(&self, visits: u64) -> f64 {
        match *self {
            AlphaSchedule::Constant { alpha } => alpha,
            AlphaSchedule::Polynomial { alpha, omega } => alpha / ((visits + 1) as f64).powf(omega),
        }
    }
}

impl Default for AlphaSchedule {
    fn default() -> Self {
        AlphaSchedule::Polynomial { alpha: 1.0, omega: 0.6 }
    }
}

/// One pass of updates over `dataset` in order, with the step size taken
/// from each entry's visit count.
pub fn sweep(learner: &mut JointMinimaxQLearner, dataset: &[TabularTransition], alpha: AlphaSchedule, gamma: f64) -> Result<()> {
    for t in dataset {
        let idx = learner.check(t)?;
        let a = alpha.at(learner.visits[idx]);
        joint_minimaxq_update(learner, t, a, gamma)?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointMinimaxConfig {
    pub episodes: usize,
    #[serde(default)]
    pub alpha: AlphaSchedule,
    #[serde(default)]
    pub epsilon: EpsilonSchedule,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub checkpoint_every: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointMinimaxRow {
    pub episode: usize,
    pub epsilon: f64,
    /// Mean |ΔQ| over the episode's updates.
    pub mean_change: f64,
}

#[derive(Debug, Clone)]
pub struct JointMinimaxOutcome {
    pub learner: JointMinimaxQLearner,
    pub metrics: Vec<JointMinimaxRow>,
    pub checkpoints: Vec<(usize, JointMinimaxQLearner)>,
    pub total_steps: usize,
}

/// Online centralized minimax-Q on a tabular game. Each team plays its greedy
/// joint action; every agent then independently explores with probability ε.
pub fn train_joint_minimax(game: &TabularGame, config: &JointMinimaxConfig) -> Result<JointMinimaxOutcome> {
    config.alpha.validate()?;
    config.epsilon.validate()?;
    if config.checkpoint_every == Some(0) {
        return Err(Error::Config("checkpoint cadence must be at least 1".into()));
    }
    let mut learner = JointMinimaxQLearner::for_game(game);
    let mut rng = seeded_rng(config.seed, STREAM_ROLLOUT);
    let pro_space = game.pro_joint();
    let ant_space = game.ant_joint();
    let gamma = game.gamma();
    let m = config.episodes;
    let mut metrics = Vec::with_capacity(m);
    let mut checkpoints = Vec::new();
    let mut total_steps = 0;

    for episode in 0..m {
        let epsilon = config.epsilon.at(episode, m);
        let mut state = sample_support(&game.initial_distribution(), &mut rng);
        let mut change = 0.0;
        let mut steps = 0;
        for t in 0..game.horizon() {
            let (pro_greedy, ant_greedy) = {
                let (na, nb) = learner.joint_sizes();
                let q = learner.state_matrix(state);
                (crate::oracle::max_min(q, na, nb).pro, min_max(q, na, nb).ant)
            };
            let explore = |counts: &[usize], greedy: Vec<usize>, rng: &mut rand_chacha::ChaCha8Rng| -> Vec<usize> {
                greedy
                    .into_iter()
                    .zip(counts)
                    .map(|(g, &n)| if rng.gen::<f64>() < epsilon { rng.gen_range(0..n) } else { g })
                    .collect()
            };
            let pro = explore(game.pro_action_counts(), pro_space.decode(pro_greedy), &mut rng);
            let ant = explore(game.ant_action_counts(), ant_space.decode(ant_greedy), &mut rng);
            let next = sample_support(&game.transition(state, &pro, &ant), &mut rng);
            let done = t + 1 >= game.horizon() || game.is_terminal(next);
            let transition = TabularTransition {
                state,
                pro: pro_space.encode(&pro)?,
                ant: ant_space.encode(&ant)?,
                reward: game.reward(state, &pro, &ant),
                next_state: next,
                done,
                weight: 1.0,
            };
            let idx = learner.check(&transition)?;
            let before = learner.table[idx];
            let a = config.alpha.at(learner.visits[idx]);
            joint_minimaxq_update(&mut learner, &transition, a, gamma)?;
            change += (learner.table[idx] - before).abs();
            steps += 1;
            total_steps += 1;
            state = next;
            if done {
                break;
            }
        }
        metrics.push(JointMinimaxRow {
            episode,
            epsilon,
            mean_change: change / steps as f64,
        });
        if let Some(k) = config.checkpoint_every {
            if (episode + 1) % k == 0 {
                checkpoints.push((episode + 1, learner.clone()));
            }
        }
    }
    Ok(JointMinimaxOutcome {
        learner,
        metrics,
        checkpoints,
        total_steps,
    })
}
