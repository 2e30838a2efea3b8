use std::path::PathBuf;

use thiserror::Error;

/// Location of a single model evaluation inside a design.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CellKey {
    pub block: usize,
    pub replicate: usize,
    pub role: crate::design::Role,
}

impl std::fmt::Display for CellKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "(block {}, replicate {}, role {})",
            self.block, self.replicate, self.role
        )
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter out of domain: {0}")]
    ParameterDomain(String),

    #[error("insufficient sample: need at least {needed}, got {got}")]
    InsufficientSample { needed: usize, got: usize },

    #[error("degenerate output: {0}")]
    DegenerateOutput(String),

    #[error("order {order} exceeds the supported limit of {limit}")]
    OrderLimit { order: usize, limit: usize },

    #[error("no solution: {0}")]
    NoSolution(String),

    #[error("quadrature did not reach tolerance {tol:e} (estimated error {estimate:e})")]
    Tolerance { tol: f64, estimate: f64 },

    #[error("partition error: {0}")]
    Partition(String),

    #[error("model evaluation failed at {at}: {message}")]
    Model { at: CellKey, message: String },

    #[error("external model failed: {0}")]
    ExternalModel(String),

    #[error("external model timed out after {0} s")]
    Timeout(u64),

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::ParameterDomain(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
