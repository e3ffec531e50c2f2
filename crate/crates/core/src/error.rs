use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the hazard model, its fitting routines and the data layer.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("numeric range error: {0}")]
    NumericRange(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("index {index} out of range 1..={len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("{path}: {message}")]
    Data { path: PathBuf, message: String },

    #[error("dataset is already normalized")]
    AlreadyNormalized,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by floating-point range problems rather than bad input.
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::NumericRange(_))
    }

    pub(crate) fn data(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Data {
            path: path.into(),
            message: message.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
