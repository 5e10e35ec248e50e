//! Evaluation protocols: matches between saved policies, round-robin payoff
//! tables, optimization trends, exact NashConv curves, scripted-bot curves
//! and the replay-buffer ablation.

mod ablation;
mod checkpoint;
mod matches;
mod report;
mod tournament;

pub use ablation::{ablate_buffer, AblationOutcome, AblationSeed, AblationSizes, ABLATION_LABELS};
pub use checkpoint::{load_checkpoints, Checkpoint, CheckpointModel, Method, TablePolicy, CHECKPOINT_VERSION};
pub use matches::{play_match, MatchConfig, MatchResult, ScriptedPolicy, Z95};
pub use report::{nashconv_curve, vs_bot_curve, CurvePoint, EvalReport, EVAL_REPORT_VERSION};
pub use tournament::{normalize_returns, optimization_trend, round_robin, Contestant, PayoffTable, RoundRobin, RrEntry, TrendReport};
