use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the lab.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected:?}, got {actual:?}")]
    Shape {
        context: String,
        expected: Vec<usize>,
        actual: Vec<usize>,
    },

    #[error("invalid architecture: {0}")]
    Architecture(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("stale or mismatched forward cache: {0}")]
    StaleCache(String),

    #[error("cross-entropy requires probability vectors: {0}")]
    NotNormalized(String),

    #[error("empty dataset: {0}")]
    EmptyDataset(String),

    #[error("{path}: {reason}")]
    DataFile { path: PathBuf, reason: String },

    #[error("backdoor: {0}")]
    Backdoor(String),

    #[error("unknown weight group: layer {layer_index} {kind}")]
    UnknownGroup { layer_index: usize, kind: String },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn shape(context: impl Into<String>, expected: &[usize], actual: &[usize]) -> Self {
        Error::Shape {
            context: context.into(),
            expected: expected.to_vec(),
            actual: actual.to_vec(),
        }
    }
}
