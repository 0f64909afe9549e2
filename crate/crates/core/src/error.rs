use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("kernel matrix is not positive definite after jitter up to {max_jitter:e}")]
    CholeskyFailure { max_jitter: f64 },

    #[error("hyperparameter fit failed for all {restarts} restarts")]
    FitDegenerate { restarts: usize },

    #[error("invalid kernel spec: {0}")]
    InvalidSpec(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("trip {trip_id} too short: {len} samples, need at least {min}")]
    TooShort { trip_id: String, len: usize, min: usize },

    #[error("trip {trip_id} has a {gap_s:.3} s gap at t = {t:.3} s")]
    GapTooLarge { trip_id: String, t: f64, gap_s: f64 },

    #[error("need {needed} samples of history before t0 index {index}")]
    InsufficientHistory { index: usize, needed: usize },

    #[error("no selections recorded")]
    Empty,

    #[error("{}:{line}: {message}", file.display())]
    Schema {
        file: PathBuf,
        line: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures that come from the numerics rather than from the
    /// input data or configuration.
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::CholeskyFailure { .. } | Error::FitDegenerate { .. })
    }
}
