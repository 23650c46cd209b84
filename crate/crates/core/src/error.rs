use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}:{line}: coded value {value} outside [0, 63]")]
    CodedRange {
        path: PathBuf,
        line: usize,
        value: i64,
    },

    #[error("coded value {0} outside [0, 63]")]
    CodedValue(i64),

    #[error("series too short: need at least {required} samples, got {actual}")]
    Length { required: usize, actual: usize },

    #[error("image {width}x{height} cannot hold a single {patch}px patch")]
    EmptyGrid {
        width: usize,
        height: usize,
        patch: usize,
    },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },

    #[error("descriptor pool holds {available} descriptors, codebook needs {requested}")]
    PoolTooSmall { available: usize, requested: usize },

    #[error("descriptor pool holds only {distinct} distinct descriptors, codebook needs {requested}")]
    NotDistinct { distinct: usize, requested: usize },

    #[error("descriptor kind mismatch: codebook built from {codebook}, got {descriptors}")]
    KindMismatch {
        codebook: String,
        descriptors: String,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("empty input: {0}")]
    Empty(String),

    #[error("training needs at least two classes, got {0}")]
    SingleClass(usize),

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("malformed {what}: {message}")]
    Format { what: &'static str, message: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(what: &'static str, message: impl Into<String>) -> Self {
        Error::Format {
            what,
            message: message.into(),
        }
    }

    /// True for violations of the evaluation protocol (mismatched split plans,
    /// too few samples per class) as opposed to bad input data.
    pub fn is_protocol(&self) -> bool {
        matches!(self, Error::Protocol(_))
    }
}
