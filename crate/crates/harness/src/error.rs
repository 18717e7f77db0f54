use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, HarnessError>;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Core(#[from] slicegen_core::Error),
    // The OS error is part of the message rather than a source, so chained
    // reports do not print it twice.
    #[error("{path}: {error}")]
    Io { path: PathBuf, error: std::io::Error },
    #[error("invalid config: {0}")]
    Config(String),
    #[error("{path}: {reason}")]
    Idx { path: PathBuf, reason: String },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("figure: {0}")]
    Plot(String),
    #[error("point panicked: {0}")]
    Panicked(String),
    #[error("run record has no completed points")]
    EmptyRecord,
    #[error("run record format version {found} is not supported (expected {expected})")]
    Schema { found: u32, expected: u32 },
}

impl HarnessError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HarnessError::Io { path: path.into(), error: source }
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        HarnessError::Config(msg.into())
    }
}
