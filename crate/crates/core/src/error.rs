use std::path::PathBuf;

use thiserror::Error;

/// Errors surfaced by the mapping engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid entity: {0:?}")]
    InvalidEntity(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed {what} at {path}:{line}: {message}")]
    Parse {
        what: &'static str,
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("source {source_id} unavailable: {message}")]
    SourceUnavailable { source_id: String, message: String },

    #[error("embedding unavailable for {text:?}: {message}")]
    EmbeddingUnavailable { text: String, message: String },

    #[error("solution space size overflows 128 bits for n={n}, m={m}")]
    Overflow { n: usize, m: usize },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
