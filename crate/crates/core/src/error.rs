use thiserror::Error;

/// Errors raised by games, solvers, learners and the evaluation harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("joint action space of {actual} combinations exceeds the enumeration guard of {limit}")]
    EnumerationGuard { actual: usize, limit: usize },

    #[error("IGMM violation: {0}")]
    IgmmViolation(String),

    #[error("invalid action: {0}")]
    InvalidAction(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("policy is not total: {0}")]
    PolicyNotTotal(String),

    #[error("dataset leaves {} (state, pro, ant) entries uncovered, first {:?}", .missing.len(), .missing.first())]
    Uncovered { missing: Vec<(usize, usize, usize)> },

    #[error("gradient tape was already consumed")]
    TapeConsumed,

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
