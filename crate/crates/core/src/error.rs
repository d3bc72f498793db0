use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Failure classes surfaced by every stage of the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed record at line {line}: {message}")]
    Malformed { line: usize, message: String },

    #[error("missing field {field} at line {line}")]
    MissingField { field: &'static str, line: usize },

    #[error("duplicate problem id {0:?}")]
    DuplicateId(String),

    #[error("invalid problem {id:?}: {message}")]
    InvalidProblem { id: String, message: String },

    #[error("embedding file line {line}: {message}")]
    Embedding { line: usize, message: String },

    #[error("artifact error: {0}")]
    Artifact(String),

    #[error("invalid parameter {name}: {message}")]
    Parameter { name: &'static str, message: String },

    #[error("class {class:?} has {available} items, {required} required")]
    InsufficientClass {
        class: String,
        available: usize,
        required: usize,
    },

    #[error("class {0:?} has no training examples")]
    EmptyClass(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("{0} is empty")]
    Empty(&'static str),

    #[error("training diverged at epoch {epoch} (loss {loss})")]
    Divergence { epoch: usize, loss: f64 },

    #[error("fold {} failed: {source}", .fold + 1)]
    Fold {
        fold: usize,
        #[source]
        source: Box<Error>,
    },
}

/// Coarse failure classes used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    InputFormat,
    Parameter,
    Divergence,
}

impl Error {
    pub fn param(name: &'static str, message: impl Into<String>) -> Self {
        Error::Parameter {
            name,
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Io { .. }
            | Error::Malformed { .. }
            | Error::MissingField { .. }
            | Error::DuplicateId(_)
            | Error::InvalidProblem { .. }
            | Error::Embedding { .. }
            | Error::Artifact(_) => ErrorClass::InputFormat,
            Error::Parameter { .. }
            | Error::InsufficientClass { .. }
            | Error::EmptyClass(_)
            | Error::Shape(_)
            | Error::Empty(_) => ErrorClass::Parameter,
            Error::Divergence { .. } => ErrorClass::Divergence,
            Error::Fold { source, .. } => source.class(),
        }
    }
}
