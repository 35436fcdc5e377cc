use std::path::PathBuf;

use thiserror::Error;

use crate::solver::SolveStatus;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to parse instance document: {0}")]
    Parse(String),

    #[error("invalid instance ({entity}): {message}")]
    Validation { entity: String, message: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: String, got: String },

    #[error("backend `{backend}` cannot handle this model: {reason}")]
    Capability { backend: String, reason: String },

    #[error("backend `{backend}` failed: {message}")]
    Backend { backend: String, message: String },

    #[error("iteration {iteration}: {source}")]
    Iteration {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("solution is missing a value for `{0}`")]
    MissingValue(String),

    #[error("enumeration budget exceeded after {visited} nodes (budget {budget})")]
    EnumerationBudget { visited: u64, budget: u64 },

    #[error("subproblem returned unexpected status {0:?}")]
    UnexpectedStatus(SolveStatus),

    #[error("malformed model file: {0}")]
    ModelFile(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(entity: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            entity: entity.into(),
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
