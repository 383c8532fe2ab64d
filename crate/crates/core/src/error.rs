use std::path::PathBuf;

use thiserror::Error;

use crate::ClassId;

/// Errors surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// A count, size, or range argument is outside its valid domain.
    #[error("invalid argument `{name}`: {reason}")]
    InvalidArgument { name: &'static str, reason: String },

    /// A vector with zero norm was passed where a direction is required.
    #[error("zero-norm vector passed to {0}")]
    ZeroNorm(&'static str),

    /// Two vectors that must share a dimension do not.
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    /// No training views survive the ambiguity threshold for a class.
    #[error("class {class} has no training views below ambiguity threshold {threshold}")]
    EmptyTrainSet { class: ClassId, threshold: f64 },

    /// A lookup referenced a class that has no codebook or table.
    #[error("unknown class {0}")]
    UnknownClass(ClassId),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error on {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("json error on {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidArgument {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
