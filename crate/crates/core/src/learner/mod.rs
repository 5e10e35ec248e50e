//! The factorized minimax Q learner.
//!
//! A factorized model holds one individual Q function per agent on both teams
//! and a mixer combining the chosen individual values (Ant values negated)
//! into Q_tot. When the mixer is monotone the joint min-max of Q_tot is
//! reached at the profile of per-agent argmaxes, so greedy decentralized
//! execution and the TD target never enumerate joint actions.

mod buffer;
mod coordinator;
mod igmm;
mod mixer;
mod neural;
mod policy;
mod tabular;
mod train;

pub use buffer::{BufferMode, BufferSpec, ReplayBuffer};
pub use coordinator::{Coordinator, RoundRecord};
pub use igmm::{igmm_check, IgmmVerdict, Profile};
pub use mixer::{MixTape, MixWeights, Mixer, MixerKind, MixerSpec, DEFAULT_MIX_HIDDEN};
pub use neural::{
    loss, td_target, td_target_checked, Fm3qNet, Fm3qTopology, LossOutput, ModelDocument,
    NeuralFactorizedQ, QTotTape, MODEL_DOCUMENT_VERSION,
};
pub use policy::{
    extract_policies, select_actions, tabulate_policy, FactorizedModel, GreedyPolicyPair,
    TeamPolicy,
};
pub use tabular::{
    exact_operator_apply, full_coverage_dataset, TabularFactorizedQ, TabularTransition,
};
pub use train::{train, train_with, EpsilonSchedule, MetricsRow, TrainConfig, TrainOutcome};

use crate::error::{Error, Result};
use crate::games::{AugmentedState, JointAction, JointSpace, Team, JOINT_ACTION_GUARD};

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Joint spaces for both teams, refusing spaces beyond the enumeration guard.
pub fn guarded_spaces(pro: &[usize], ant: &[usize]) -> Result<(JointSpace, JointSpace)> {
    let (p, a) = (JointSpace::new(pro), JointSpace::new(ant));
    let actual = p.size().saturating_mul(a.size());
    if actual > JOINT_ACTION_GUARD {
        return Err(Error::EnumerationGuard {
            actual,
            limit: JOINT_ACTION_GUARD,
        });
    }
    Ok((p, a))
}

/// Individual Q functions for both teams combined into Q_tot.
pub trait FactorizedQ {
    fn pro_action_counts(&self) -> &[usize];
    fn ant_action_counts(&self) -> &[usize];

    /// Q_i^+(τ_i, ·) for `Team::Pro`, Q_j^−(v_j, ·) for `Team::Ant`.
    fn agent_values(&self, state: &AugmentedState, team: Team, agent: usize) -> Result<Vec<f64>>;

    fn q_tot(&self, state: &AugmentedState, action: &JointAction) -> Result<f64>;

    /// Q_tot over every (pro joint, ant joint) pair, row-major by Pro joint
    /// index.
    fn joint_table(&self, state: &AugmentedState) -> Result<Vec<f64>> {
        let (pro, ant) = guarded_spaces(self.pro_action_counts(), self.ant_action_counts())?;
        let mut table = Vec::with_capacity(pro.size() * ant.size());
        for ai in 0..pro.size() {
            let a = pro.decode(ai);
            for bi in 0..ant.size() {
                table.push(self.q_tot(state, &JointAction::new(a.clone(), ant.decode(bi)))?);
            }
        }
        Ok(table)
    }

    /// Every agent's individual argmax.
    fn greedy(&self, state: &AugmentedState) -> Result<JointAction> {
        let pick = |team: Team, n: usize| -> Result<Vec<usize>> {
            (0..n)
                .map(|i| self.agent_values(state, team, i).map(|v| argmax(&v)))
                .collect()
        };
        Ok(JointAction::new(
            pick(Team::Pro, self.pro_action_counts().len())?,
            pick(Team::Ant, self.ant_action_counts().len())?,
        ))
    }
}
