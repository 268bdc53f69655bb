use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("interaction log is empty")]
    EmptyLog,
    #[error("field `{0}` has both numeric and non-numeric values")]
    MixedType(String),
    #[error("field `{0}` is missing")]
    MissingField(String),
    #[error("required column `{0}` is missing")]
    MissingColumn(String),
    #[error("item `{0}` is not in the item vocabulary")]
    UnknownItem(String),
    #[error("malformed value in column `{column}` at row {row}: {value:?}")]
    BadValue {
        column: String,
        row: usize,
        value: String,
    },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("parameter vector length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("replay buffer is empty")]
    EmptyBuffer,
    #[error("need {needed} distinct items but only {available} are available")]
    InsufficientItems { needed: usize, available: usize },
    #[error("trial stream is empty")]
    EmptyStream,
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("malformed checkpoint: {0}")]
    Checkpoint(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Coarse failure class, used by the CLI to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Data,
    Other,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Config(_) => ErrorKind::Config,
            Error::EmptyLog
            | Error::MixedType(_)
            | Error::MissingField(_)
            | Error::MissingColumn(_)
            | Error::UnknownItem(_)
            | Error::BadValue { .. }
            | Error::EmptyStream
            | Error::Csv(_) => ErrorKind::Data,
            _ => ErrorKind::Other,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
