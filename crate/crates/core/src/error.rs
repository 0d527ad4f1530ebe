//! Crate-wide error type.

use std::path::PathBuf;

use thiserror::Error;

use crate::gateway::GatewayError;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Malformed input data; `line` is 1-based (0 when not line-oriented).
    #[error("parse error at {path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("invalid triple {id}: {message}")]
    InvalidTriple { id: String, message: String },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("{what} not found: {key}")]
    NotFound { what: &'static str, key: String },

    #[error("duplicate {what}: {key}")]
    Duplicate { what: &'static str, key: String },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Provider(#[from] GatewayError),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
