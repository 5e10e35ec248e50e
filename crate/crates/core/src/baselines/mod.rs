//! Comparison learners: independent per-agent Q-learning in self-play and
//! centralized tabular minimax-Q over joint actions.

mod iql;
mod jminimax;

pub use iql::{selfplay_independent_train, AgentDocument, IndependentAgent, IndependentDocument, IndependentModel, IqlOutcome, IQL_DOCUMENT_VERSION};
pub use jminimax::{
    joint_minimaxq_update, sweep, train_joint_minimax, AlphaSchedule, JointMinimaxConfig, JointMinimaxOutcome, JointMinimaxQLearner,
    JointMinimaxRow,
};
