//! Crate-wide error type.

use std::path::PathBuf;

/// Errors surfaced by corpus loading, training, embedding, and evaluation.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A record in a line-delimited file could not be parsed.
    #[error("{path}:{line}: {message}")]
    Malformed {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("duplicate problem id `{0}`")]
    DuplicateId(String),

    #[error("rule references unknown concept `{0}`")]
    UnknownConcept(String),

    #[error("invalid pattern for concept `{concept}`: {source}")]
    BadPattern {
        concept: String,
        #[source]
        source: Box<regex::Error>,
    },

    #[error("index {index} out of range (size {size})")]
    IndexOutOfRange { index: usize, size: usize },

    #[error("unembeddable problem: {0}")]
    Unembeddable(String),

    #[error("cosine of a zero vector is undefined")]
    ZeroVector,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("missing embeddings for: {}", ids.join(", "))]
    MissingEmbeddings { ids: Vec<String> },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn malformed(
        path: impl Into<PathBuf>,
        line: usize,
        message: impl Into<String>,
    ) -> Self {
        Error::Malformed {
            path: path.into(),
            line,
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
