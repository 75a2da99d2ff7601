use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed input data (bad file contents, wrong shapes, unknown labels).
    #[error("{0}")]
    Input(String),

    #[error("parse error in {path} at line {line}, column {column}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("length mismatch: {left} vs {right} observations")]
    LengthMismatch { left: usize, right: usize },

    #[error("dimension mismatch: point {index} has {found} coordinates, expected {expected}")]
    DimensionMismatch {
        index: usize,
        expected: usize,
        found: usize,
    },

    #[error("minkowski exponent must be >= 1, got {0}")]
    InvalidExponent(f64),

    #[error("graph is disconnected: no path between {0} and {1}")]
    DisconnectedGraph(String, String),

    #[error("matrix is not a valid metric: {0}")]
    InvalidMetric(String),

    #[error("not a probability measure: {0}")]
    NotProbability(String),

    #[error("index {index} out of range for support of size {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("sample size {n} too small: need at least {min}")]
    SampleTooSmall { n: usize, min: usize },

    #[error("sample size {n} too large for brute-force evaluation (limit {max})")]
    SampleTooLarge { n: usize, max: usize },

    #[error("matrix is not symmetric: |m[{i}][{j}] - m[{j}][{i}]| = {gap:e}")]
    Asymmetric { i: usize, j: usize, gap: f64 },

    #[error("space is not of negative type: {0}")]
    NotNegativeType(String),

    #[error("counterexample preconditions violated: {0}")]
    Counterexample(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures caused by unreadable or inconsistent inputs, as
    /// opposed to inputs that parse but violate an operation's preconditions.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Input(_)
                | Error::Parse { .. }
                | Error::LengthMismatch { .. }
                | Error::DimensionMismatch { .. }
                | Error::Io(_)
                | Error::Json(_)
        )
    }
}
