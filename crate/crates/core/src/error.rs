use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid split proportions: {0}")]
    InvalidProportions(String),

    #[error("degenerate split: part sizes {sizes:?} for n = {n}")]
    DegenerateSplit { n: usize, sizes: [usize; 3] },

    #[error("miscoverage level must lie in (0, 1), got {0}")]
    InvalidAlpha(f64),

    #[error(
        "calibration set too small for requested confidence: \
         need at least {needed} scores, have {have}"
    )]
    CalibrationTooSmall { needed: usize, have: usize },

    #[error("invalid conformity score {value} at position {index}")]
    InvalidScore { index: usize, value: f64 },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("arity mismatch: expected {expected} features, got {got}")]
    ArityMismatch { expected: usize, got: usize },

    #[error("invalid response: {0}")]
    InvalidResponse(String),

    #[error("IRLS failure after {iterations} iterations: {reason}")]
    IrlsFailure { iterations: usize, reason: String },

    #[error("no OOB trees for unit {row} in the {forest} forest; increase B (at least 100 recommended)")]
    NoOobTrees { row: usize, forest: &'static str },

    #[error("no positive-frequency training rows")]
    NoPositiveFrequencyRows,

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("invalid model configuration: {0}")]
    InvalidConfig(String),

    #[error("{path}: row {row}, column `{column}`: {message}")]
    Parse {
        path: String,
        row: usize,
        column: String,
        message: String,
    },

    #[error("schema error: {0}")]
    Schema(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
