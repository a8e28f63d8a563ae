use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimensions: {0}")]
    InvalidDimensions(String),

    #[error("dimension mismatch: expected {expected:?}, got {got:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },

    #[error("odd dimensions {0}x{1}: CPFA processing needs even width and height")]
    OddDimensions(usize, usize),

    #[error("sample mask has no valid pixel")]
    EmptyMask,

    #[error("invalid pattern: {0}")]
    InvalidPattern(String),

    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed image {path}: {reason}")]
    Decode { path: PathBuf, reason: String },

    #[error("scene {scene}: {path}: {source}")]
    SceneIo {
        scene: String,
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("dataset error in scene {scene}: {reason}")]
    Dataset { scene: String, reason: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn decode(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        Error::Decode {
            path: path.into(),
            reason: reason.into(),
        }
    }
}
