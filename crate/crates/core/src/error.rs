use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed interchange file. `offset` is the byte where parsing failed.
    #[error("format error at byte {offset}: {message}")]
    Format { offset: usize, message: String },

    #[error("non-finite value at flat index {index}")]
    NonFinite { index: usize },

    #[error("unsupported dtype {descr:?}, only little-endian 32-bit float ('<f4') is accepted")]
    UnsupportedDtype { descr: String },

    #[error("invalid tensor: {0}")]
    InvalidTensor(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("maximum value {max} is not positive")]
    NonPositiveMax { max: f64 },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("image error: {0}")]
    Image(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("expert {model_id} produced no positive activation for its class (maximum {max})")]
    NoPositiveActivation { model_id: String, max: f64 },

    /// Error raised inside a pipeline stage.
    #[error("{stage}: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },
}

/// Process exit codes used by the `localize` binary.
pub mod exit_code {
    pub const SUCCESS: i32 = 0;
    pub const INPUT: i32 = 2;
    pub const NUMERIC_GUARD: i32 = 3;
    pub const IO: i32 = 4;
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(offset: usize, message: impl Into<String>) -> Self {
        Error::Format {
            offset,
            message: message.into(),
        }
    }

    /// Wrap with the name of the pipeline stage that failed.
    pub fn in_stage(self, stage: impl Into<String>) -> Self {
        Error::Stage {
            stage: stage.into(),
            source: Box::new(self),
        }
    }

    /// The innermost error, looking through stage tags.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            e => e,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.root() {
            Error::NonPositiveMax { .. } | Error::NoPositiveActivation { .. } => {
                exit_code::NUMERIC_GUARD
            }
            Error::Io { .. } => exit_code::IO,
            _ => exit_code::INPUT,
        }
    }
}
