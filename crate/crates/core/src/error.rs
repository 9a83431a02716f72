use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("vertex {vertex} out of range for dimension {dim}")]
    VertexOutOfRange { vertex: u64, dim: usize },

    #[error("invalid dimension: {0}")]
    Dimension(String),

    #[error("mode mismatch: {0}")]
    ModeMismatch(String),

    #[error("map does not respect the grey pattern of a {0} cube")]
    GreyPattern(&'static str),

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("index out of range: {0}")]
    Index(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid construction: {0}")]
    Construction(String),

    #[error("factorization failed: {0}")]
    Factorization(String),

    #[error("solver not found: {0}")]
    SolverNotFound(String),

    #[error("solver timed out after {secs} s")]
    SolverTimeout { secs: u64 },

    #[error("solver exited with status {0}")]
    SolverFailed(i32),

    #[error("stale problem: {0}")]
    StaleProblem(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(msg: impl Into<String>) -> Self {
        Error::Parse(msg.into())
    }
}
