use std::path::PathBuf;

use thiserror::Error;

/// Crate-wide error type. Variant names follow the error kinds used across
/// the public operations so callers (and the C ABI) can map them to codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("inconsistent system: residual {residual:.3e} exceeds tolerance {tolerance:.3e}")]
    InconsistentSystem { residual: f64, tolerance: f64 },

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("schema error: missing column `{0}`")]
    Schema(String),

    #[error("parse error at row {row}, column `{column}`: cannot parse {value:?} as a number")]
    Parse {
        row: usize,
        column: String,
        value: String,
    },

    #[error("rank error: {0}")]
    Rank(String),

    #[error("I/O error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("format error: {0}")]
    Format(String),

    #[error("episode failed (instance {instance}, repeat {repeat}, policy `{policy}`, round {round}): {source}")]
    Episode {
        instance: usize,
        repeat: usize,
        policy: String,
        round: usize,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
