use std::path::PathBuf;

use thiserror::Error;

/// Unified error type for the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Malformed container or on-disk structure.
    #[error("malformed {what}: {detail}")]
    Format { what: &'static str, detail: String },

    /// Structurally valid input that this toolkit does not handle.
    #[error("unsupported {what}: {detail}")]
    Unsupported { what: &'static str, detail: String },

    /// Invalid argument to an operation.
    #[error("invalid parameter `{name}`: {detail}")]
    Parameter { name: &'static str, detail: String },

    /// Dimension or layout mismatch between operands.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// Non-finite or otherwise out-of-domain numeric input.
    #[error("invalid input: {0}")]
    Input(String),

    /// Training-loop failure (divergence, non-finite gradients).
    #[error("training error ({context}): {detail}")]
    Training { context: String, detail: String },

    /// Numerical failure inside a solver or transform.
    #[error("numerical error: {0}")]
    Numerical(String),

    /// Checksum or internal-consistency failure on stored artifacts.
    #[error("integrity error: {0}")]
    Integrity(String),

    /// A required file or directory is missing.
    #[error("not found: {0}")]
    NotFound(String),

    /// Dataset-level problem (bad layout, wrong channel count, ...).
    #[error("data error: {0}")]
    Data(String),

    /// Checkpoint does not match the requested use (e.g. wrong input width).
    #[error("checkpoint error: {0}")]
    Checkpoint(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
