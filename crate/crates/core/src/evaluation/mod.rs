//! Metrics, permutation control tasks, and the scores that baseline every
//! probe against its control.

mod control;
mod metrics;
mod report;
mod scores;

use thiserror::Error;

pub use control::{
    permutation, permute, run_control, same_multiset, ControlStats, ControlTrial, PermutationScope,
    DEFAULT_CONTROL_TRIALS,
};
pub use metrics::{accuracy, haversine_km, mean_gps_error, mse, points_from_predictions, EARTH_RADIUS_KM};
pub use report::{
    appendix_tsv, compute_score, table1_tsv, table2_tsv, ProbeReport, ProbeSettings, RunProvenance, Score, ScoreKind, TaskKind,
};
pub use scores::{per, selectivity};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("length mismatch: {0} predictions, {1} targets")]
    LengthMismatch(usize, usize),
    #[error("empty input")]
    Empty,
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("control trial {index} failed: {source}")]
    Trial {
        index: usize,
        #[source]
        source: Box<dyn std::error::Error + Send + Sync>,
    },
    #[error("inconsistent report: {0}")]
    Inconsistent(String),
}

pub type Result<T, E = EvalError> = std::result::Result<T, E>;
