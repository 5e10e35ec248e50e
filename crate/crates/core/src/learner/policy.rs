use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{argmax, FactorizedQ, NeuralFactorizedQ, TabularFactorizedQ};
use crate::error::{Error, Result};
use crate::games::{fresh_state, AugmentedState, JointAction, JointSpace, Team, TwoTeamGame};

/// Deterministic decentralized behavior for one or both teams.
pub trait TeamPolicy {
    /// Actions of every agent on `team` in `state`.
    fn act(&self, state: &AugmentedState, team: Team) -> Result<Vec<usize>>;
}

/// A factorized model of either backend.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "backend", rename_all = "lowercase")]
pub enum FactorizedModel {
    Neural(NeuralFactorizedQ),
    Tabular(TabularFactorizedQ),
}

impl From<NeuralFactorizedQ> for FactorizedModel {
    fn from(m: NeuralFactorizedQ) -> Self {
        FactorizedModel::Neural(m)
    }
}

impl From<TabularFactorizedQ> for FactorizedModel {
    fn from(m: TabularFactorizedQ) -> Self {
        FactorizedModel::Tabular(m)
    }
}

impl FactorizedModel {
    fn inner(&self) -> &dyn FactorizedQ {
        match self {
            FactorizedModel::Neural(m) => m,
            FactorizedModel::Tabular(m) => m,
        }
    }
}

impl FactorizedQ for FactorizedModel {
    fn pro_action_counts(&self) -> &[usize] {
        self.inner().pro_action_counts()
    }

    fn ant_action_counts(&self) -> &[usize] {
        self.inner().ant_action_counts()
    }

    fn agent_values(&self, state: &AugmentedState, team: Team, agent: usize) -> Result<Vec<f64>> {
        self.inner().agent_values(state, team, agent)
    }

    fn q_tot(&self, state: &AugmentedState, action: &JointAction) -> Result<f64> {
        self.inner().q_tot(state, action)
    }

    fn joint_table(&self, state: &AugmentedState) -> Result<Vec<f64>> {
        self.inner().joint_table(state)
    }
}

/// π_i(τ_i) = argmax Q_i^+ and μ_j(v_j) = argmax Q_j^−, lowest index on ties.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GreedyPolicyPair {
    /// Exploration rate used by [`select_actions`]; 0 for evaluation.
    pub epsilon: f64,
    pub model: FactorizedModel,
}

impl TeamPolicy for GreedyPolicyPair {
    fn act(&self, state: &AugmentedState, team: Team) -> Result<Vec<usize>> {
        (0..self.model.action_counts(team).len())
            .map(|i| self.model.agent_values(state, team, i).map(|v| argmax(&v)))
            .collect()
    }
}

trait TeamCounts {
    fn action_counts(&self, team: Team) -> &[usize];
}

impl<Q: FactorizedQ + ?Sized> TeamCounts for Q {
    fn action_counts(&self, team: Team) -> &[usize] {
        match team {
            Team::Pro => self.pro_action_counts(),
            Team::Ant => self.ant_action_counts(),
        }
    }
}

/// The ε = 0 greedy pair of a factorized model.
pub fn extract_policies(model: impl Into<FactorizedModel>) -> GreedyPolicyPair {
    GreedyPolicyPair {
        epsilon: 0.0,
        model: model.into(),
    }
}

/// ε-greedy joint action: each agent independently plays uniformly at random
/// with probability ε, otherwise its individual argmax. The argmax is thus
/// chosen with probability 1 − ε + ε/|A|. With ε = 0 no randomness is drawn.
pub fn select_actions<Q: FactorizedQ + ?Sized, R: Rng + ?Sized>(
    fq: &Q,
    state: &AugmentedState,
    epsilon: f64,
    rng: &mut R,
) -> Result<JointAction> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::Config(format!("epsilon {epsilon} outside [0, 1]")));
    }
    let mut pick = |team: Team| -> Result<Vec<usize>> {
        let counts = fq.action_counts(team).to_vec();
        counts
            .iter()
            .enumerate()
            .map(|(i, &n)| {
                if epsilon > 0.0 && rng.gen::<f64>() < epsilon {
                    Ok(rng.gen_range(0..n))
                } else {
                    fq.agent_values(state, team, i).map(|v| argmax(&v))
                }
            })
            .collect()
    };
    let pro = pick(Team::Pro)?;
    let ant = pick(Team::Ant)?;
    Ok(JointAction::new(pro, ant))
}

/// The joint action index `policy` plays for `team` in every global state,
/// for use with the exact solvers. Requires a history window of 1 so the
/// policy depends on the state alone.
pub fn tabulate_policy<P, G>(policy: &P, game: &G, team: Team, window: usize) -> Result<Vec<usize>>
where
    P: TeamPolicy + ?Sized,
    G: TwoTeamGame + ?Sized,
{
    if window != 1 {
        return Err(Error::Unsupported(format!(
            "history window {window} policies are not functions of the state"
        )));
    }
    let space = JointSpace::new(game.action_counts(team));
    (0..game.n_states())
        .map(|s| space.encode(&policy.act(&fresh_state(game, s, 0, 1), team)?))
        .collect()
}
