use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Broad failure category, used by the command-line driver to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Usage,
    Data,
    Numeric,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("corpus has no directory for bin `{0}`")]
    MissingBin(String),

    #[error("bin `{0}` contains no sentences")]
    EmptyBin(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("target words missing from the valid vocabulary: {}", .0.join(", "))]
    InvalidTargets(Vec<String>),

    #[error("empty input: {0}")]
    Empty(String),

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("token `{0}` not present")]
    UnknownToken(String),

    #[error("cosine distance undefined for a zero vector")]
    ZeroVector,

    #[error("singular value decomposition failed: {0}")]
    Svd(String),

    #[error("training diverged at update {update}: loss {loss} for pair ({word}, {context})")]
    Diverged {
        update: u64,
        loss: f64,
        word: String,
        context: String,
    },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("degenerate sample: {0}")]
    Degenerate(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }

    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Config(_) => ErrorKind::Usage,
            Error::ZeroVector
            | Error::Svd(_)
            | Error::Diverged { .. }
            | Error::Degenerate(_) => ErrorKind::Numeric,
            _ => ErrorKind::Data,
        }
    }
}
