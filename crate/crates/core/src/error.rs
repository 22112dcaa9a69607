use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error("invalid volume: {0}")]
    InvalidVolume(String),

    #[error("dimension mismatch: expected {expected:?}, found {found:?} (atlas not co-registered?)")]
    DimensionMismatch { expected: [usize; 3], found: [usize; 3] },

    #[error("manifest: {0}")]
    Manifest(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("{0}")]
    Undefined(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("unknown column `{0}`")]
    UnknownColumn(String),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            reason: reason.into(),
        }
    }
}
