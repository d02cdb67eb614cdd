use std::path::PathBuf;

/// Errors produced by the simulation, training and pruning routines.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("resource limit: {0}")]
    Resource(String),

    #[error("index out of range: {0}")]
    Index(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("non-finite value: {0}")]
    Numeric(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("schema mismatch: {0}")]
    Schema(String),

    #[error("cannot stratify: {0}")]
    Stratification(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
