//! MSE/LCC/SRCC metrics, per-configuration breakdowns, score distributions and
//! scatter export.

mod metrics;
mod predictions;
mod report;

pub use metrics::{lcc, mse, ranks, srcc};
pub use predictions::{PredictionFile, PredictionRow, PREDICTIONS_HEADER};
pub use report::{
    build_report, AblationReport, AblationRow, ConfigAverage, EvalReport, EvalSplit, GroupMetrics, Histogram, Metrics, ScatterPoint,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("length mismatch: {0} vs {1}")]
    Length(usize, usize),
    #[error("empty input")]
    Empty,
    #[error("undefined correlation: constant vector")]
    UndefinedCorrelation,
    #[error("predictions missing for: {}", .0.join(", "))]
    Missing(Vec<String>),
    #[error("record {0} has no ground-truth labels")]
    Unlabeled(String),
    #[error("predictions line {line}: {msg}")]
    Format { line: usize, msg: String },
    #[error("duplicate prediction id {0}")]
    DuplicateId(String),
    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, EvalError>;
