use std::path::PathBuf;

use thiserror::Error;

/// Errors raised across the crate. The variant is the error category that
/// the command-line front-end maps onto an exit code.
#[derive(Debug, Error)]
pub enum Error {
    #[error("config error: {0}")]
    Config(String),

    #[error("trace error: {0}")]
    Trace(String),

    #[error("failed to load {path}: {reason}")]
    Load { path: PathBuf, reason: String },

    #[error("environment error: {0}")]
    Env(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("learner error: {0}")]
    Learner(String),

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn load(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        Error::Load {
            path: path.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for this error category.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Trace(_) | Error::Load { .. } => 3,
            Error::Io { .. } => 4,
            Error::Checkpoint(_) => 5,
            Error::Env(_) | Error::Shape(_) | Error::Learner(_) => 6,
        }
    }

    pub fn category(&self) -> &'static str {
        match self {
            Error::Config(_) => "config",
            Error::Trace(_) | Error::Load { .. } => "data",
            Error::Io { .. } => "io",
            Error::Checkpoint(_) => "checkpoint",
            Error::Env(_) => "environment",
            Error::Shape(_) => "shape",
            Error::Learner(_) => "learner",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
