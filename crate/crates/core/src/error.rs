use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("operator is not Hermitian (max deviation {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("argument out of range: {0}")]
    OutOfRange(String),

    #[error("simulation failed at t = {time}: {reason}")]
    SimulationFailure { time: f64, reason: String },

    #[error("unknown model id `{0}`")]
    UnknownModel(String),

    #[error("not enough data: {0}")]
    InsufficientData(String),

    #[error("training diverged at epoch {epoch}, batch {batch} (lr = {lr:e}): {reason}")]
    NonFiniteLoss {
        epoch: usize,
        batch: usize,
        lr: f64,
        reason: String,
    },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("missing series `{0}`")]
    MissingSeries(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
