use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the core library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mass function: {0}")]
    InvalidMass(String),

    #[error("invalid set budget: {0}")]
    InvalidBudget(String),

    #[error("unknown class name `{0}`")]
    UnknownClass(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("non-finite value in layer {layer} during {stage}")]
    NonFinite { layer: usize, stage: &'static str },

    #[error("validation split is empty")]
    EmptyValidation,

    #[error("training set is empty")]
    EmptyTraining,

    #[error("stratification infeasible for classes: {}", .0.join(", "))]
    Stratification(Vec<String>),

    #[error("invalid tier policy: {}", .0.join("; "))]
    Policy(Vec<String>),

    #[error("entropy {entropy} bits exceeds the frame maximum {max}")]
    EntropyOutOfRange { entropy: f64, max: f64 },

    #[error("model/budget mismatch: {0}")]
    ModelMismatch(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn json(path: impl Into<PathBuf>, source: serde_json::Error) -> Self {
        Error::Json {
            path: path.into(),
            source,
        }
    }

    /// True for failures caused by numerics rather than inputs.
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::NonFinite { .. } | Error::EntropyOutOfRange { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
