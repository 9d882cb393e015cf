use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {op}: {left:?} vs {right:?}")]
    Shape {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("invalid parameter: {0}")]
    Param(String),

    #[error("invalid model configuration: {0}")]
    Config(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("row {line}: {message}")]
    Row { line: usize, message: String },

    #[error("gradient oracle: {0}")]
    Oracle(String),

    #[error("model file format: {0}")]
    Format(String),

    #[error("metric undefined: {0}")]
    Metric(String),

    #[error("account {account}: timestamp {timestamp} is not after {last}")]
    Ordering {
        account: String,
        timestamp: i64,
        last: i64,
    },

    #[error("internal error: {0}")]
    Internal(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Stream(#[from] std::io::Error),

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
