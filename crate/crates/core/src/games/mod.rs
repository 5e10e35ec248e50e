//! Two-team zero-sum Markov games.
//!
//! Every game exposes the same interface: enumerable global states, per-agent
//! discrete action sets for the Pro (maximizing) and Ant (minimizing) teams,
//! a transition distribution, a deterministic Pro reward and per-agent
//! observation functions. Three concrete games live here: explicit tabular
//! games (random or matrix), and a small grid keep-away game.

mod grid;
mod history;
mod tabular;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use grid::{grid_keepaway_game, GridConfig, GridKeepaway, GridMove};
pub use history::{AugmentedState, History};
pub use tabular::{
    matrix_team_game, random_tabular_game, PayoffTensor, RandomGameSpec, TabularGame, Tensor,
};

/// Largest number of (pro joint action, ant joint action) pairs per state
/// that solvers are allowed to enumerate.
pub const JOINT_ACTION_GUARD: usize = 10_000;

/// Which side of the game an agent plays on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Team {
    Pro,
    Ant,
}

impl Team {
    pub fn opponent(self) -> Team {
        match self {
            Team::Pro => Team::Ant,
            Team::Ant => Team::Pro,
        }
    }
}

/// Mixed-radix indexing of a team's joint action. Agent 0 is the most
/// significant digit, so joint index order is lexicographic in the agents'
/// actions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JointSpace {
    counts: Vec<usize>,
    size: usize,
}

impl JointSpace {
    pub fn new(counts: &[usize]) -> Self {
        Self {
            counts: counts.to_vec(),
            size: counts.iter().product(),
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn encode(&self, actions: &[usize]) -> Result<usize> {
        if actions.len() != self.counts.len() {
            return Err(Error::InvalidAction(format!(
                "expected {} agent actions, got {}",
                self.counts.len(),
                actions.len()
            )));
        }
        let mut index = 0;
        for (agent, (&a, &count)) in actions.iter().zip(&self.counts).enumerate() {
            if a >= count {
                return Err(Error::InvalidAction(format!(
                    "agent {agent} action {a} outside 0..{count}"
                )));
            }
            index = index * count + a;
        }
        Ok(index)
    }

    pub fn decode(&self, mut index: usize) -> Vec<usize> {
        let mut actions = vec![0; self.counts.len()];
        for (slot, &count) in actions.iter_mut().zip(&self.counts).rev() {
            *slot = index % count;
            index /= count;
        }
        actions
    }
}

/// One simultaneous move of both teams.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JointAction {
    pub pro: Vec<usize>,
    pub ant: Vec<usize>,
}

impl JointAction {
    pub fn new(pro: Vec<usize>, ant: Vec<usize>) -> Self {
        Self { pro, ant }
    }

    /// Checks every index against its agent's action count.
    pub fn validate<G: TwoTeamGame + ?Sized>(&self, game: &G) -> Result<()> {
        JointSpace::new(game.pro_action_counts()).encode(&self.pro)?;
        JointSpace::new(game.ant_action_counts()).encode(&self.ant)?;
        Ok(())
    }
}

/// One recorded transition ⟨s̃, (a, b), r, s̃′, done⟩.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeStep {
    pub state: AugmentedState,
    pub action: JointAction,
    pub reward: f64,
    pub next_state: AugmentedState,
    pub done: bool,
}

/// The two-team zero-sum Markov game interface.
///
/// States are enumerated as `0..n_states()`. Rewards are Pro's; Ant receives
/// the negation. Implementations are immutable after construction.
pub trait TwoTeamGame: Send + Sync {
    fn n_pro(&self) -> usize {
        self.pro_action_counts().len()
    }
    fn n_ant(&self) -> usize {
        self.ant_action_counts().len()
    }
    fn pro_action_counts(&self) -> &[usize];
    fn ant_action_counts(&self) -> &[usize];
    fn gamma(&self) -> f64;
    fn horizon(&self) -> usize;
    /// Declared bound on |R|.
    fn reward_bound(&self) -> f64;
    fn n_states(&self) -> usize;
    /// Support of the initial-state distribution with probabilities.
    fn initial_distribution(&self) -> Vec<(usize, f64)>;
    /// Next-state distribution as (state, probability) pairs with positive mass.
    fn transition(&self, state: usize, pro: &[usize], ant: &[usize]) -> Vec<(usize, f64)>;
    fn reward(&self, state: usize, pro: &[usize], ant: &[usize]) -> f64;
    fn is_terminal(&self, _state: usize) -> bool {
        false
    }
    /// True when every transition has a single support point.
    fn is_deterministic(&self) -> bool;
    fn observation_dim(&self, team: Team) -> usize;
    fn observe(&self, state: usize, team: Team, agent: usize) -> Vec<f64>;
    fn state_dim(&self) -> usize;
    fn state_features(&self, state: usize) -> Vec<f64>;
    /// Hand-written deterministic opponent used for vs-bot evaluation.
    fn scripted_action(&self, state: usize, team: Team) -> Vec<usize>;

    fn action_counts(&self, team: Team) -> &[usize] {
        match team {
            Team::Pro => self.pro_action_counts(),
            Team::Ant => self.ant_action_counts(),
        }
    }

    fn team_size(&self, team: Team) -> usize {
        self.action_counts(team).len()
    }

    fn pro_joint(&self) -> JointSpace {
        JointSpace::new(self.pro_action_counts())
    }

    fn ant_joint(&self) -> JointSpace {
        JointSpace::new(self.ant_action_counts())
    }
}

/// Builds the augmented state for global state `state` at step `t` with empty
/// histories (only the current observation filled in).
pub fn fresh_state<G: TwoTeamGame + ?Sized>(
    game: &G,
    state: usize,
    t: usize,
    window: usize,
) -> AugmentedState {
    let build = |team: Team| -> Vec<History> {
        (0..game.team_size(team))
            .map(|i| {
                History::start(
                    window,
                    game.observe(state, team, i),
                    game.action_counts(team)[i],
                )
            })
            .collect()
    };
    AugmentedState {
        state,
        t,
        pro: build(Team::Pro),
        ant: build(Team::Ant),
        global: game.state_features(state),
    }
}

/// Samples an initial state and returns its augmented state at t = 0.
pub fn reset<G: TwoTeamGame + ?Sized, R: Rng + ?Sized>(
    game: &G,
    window: usize,
    rng: &mut R,
) -> AugmentedState {
    let initial = game.initial_distribution();
    let state = sample_support(&initial, rng);
    fresh_state(game, state, 0, window)
}

pub(crate) fn sample_support<R: Rng + ?Sized>(support: &[(usize, f64)], rng: &mut R) -> usize {
    if support.len() == 1 {
        return support[0].0;
    }
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for &(s, p) in support {
        acc += p;
        if u < acc {
            return s;
        }
    }
    support.last().map(|&(s, _)| s).unwrap_or(0)
}

/// Advances the game by one simultaneous move.
///
/// Samples s′ ~ P(·|s, a, b), computes r = R(s, a, b) and rolls every agent's
/// history window forward. `done` is set when the horizon is reached or s′ is
/// terminal. Deterministic games consume no randomness.
pub fn step<G: TwoTeamGame + ?Sized, R: Rng + ?Sized>(
    game: &G,
    current: &AugmentedState,
    action: &JointAction,
    rng: &mut R,
) -> Result<EpisodeStep> {
    action.validate(game)?;
    let support = game.transition(current.state, &action.pro, &action.ant);
    let next = sample_support(&support, rng);
    let reward = game.reward(current.state, &action.pro, &action.ant);
    let t = current.t + 1;
    let done = t >= game.horizon() || game.is_terminal(next);
    let roll = |team: Team, histories: &[History], actions: &[usize]| -> Vec<History> {
        histories
            .iter()
            .zip(actions)
            .enumerate()
            .map(|(i, (h, &a))| h.rolled(game.observe(next, team, i), a))
            .collect()
    };
    let next_state = AugmentedState {
        state: next,
        t,
        pro: roll(Team::Pro, &current.pro, &action.pro),
        ant: roll(Team::Ant, &current.ant, &action.ant),
        global: game.state_features(next),
    };
    Ok(EpisodeStep {
        state: current.clone(),
        action: action.clone(),
        reward,
        next_state,
        done,
    })
}

/// Checks every transition row of an enumerable game sums to one.
pub fn check_transitions<G: TwoTeamGame + ?Sized>(game: &G, tol: f64) -> Result<()> {
    let pro = game.pro_joint();
    let ant = game.ant_joint();
    for s in 0..game.n_states() {
        for ai in 0..pro.size() {
            let a = pro.decode(ai);
            for bi in 0..ant.size() {
                let b = ant.decode(bi);
                let total: f64 = game.transition(s, &a, &b).iter().map(|&(_, p)| p).sum();
                if (total - 1.0).abs() > tol {
                    return Err(Error::Dimension(format!(
                        "transition row ({s},{ai},{bi}) sums to {total}"
                    )));
                }
            }
        }
    }
    Ok(())
}

/// Smallest horizon with γ^H ≤ 1e-3, at least one step.
pub fn default_horizon(gamma: f64) -> usize {
    if gamma <= 0.0 {
        return 1;
    }
    ((1e-3f64).ln() / gamma.ln()).ceil().max(1.0) as usize
}
