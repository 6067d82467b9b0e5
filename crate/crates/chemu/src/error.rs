use std::path::PathBuf;
use thiserror::Error;

/// Errors produced across the emulation pipeline.
#[derive(Debug, Error)]
pub enum ChemuError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("scenario parse error at line {line}: {msg}")]
    ScenarioParse { line: usize, msg: String },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("out of range: {0}")]
    OutOfRange(String),

    #[error("near-dependent chirp basis: pivot {pivot:.3e} below threshold {threshold:.3e} at column {column}")]
    NearDependentBasis {
        column: usize,
        pivot: f64,
        threshold: f64,
    },

    #[error("singular geometry: {0}")]
    SingularGeometry(String),

    #[error("file format error in {path}: {msg}")]
    Format { path: PathBuf, msg: String },

    #[error("truncated payload in {path}: expected {expected} bytes, found {found}")]
    TruncatedPayload {
        path: PathBuf,
        expected: u64,
        found: u64,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl ChemuError {
    /// Process exit code for the CLI contract: 2 for data/format errors,
    /// 3 for numeric failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            ChemuError::NearDependentBasis { .. } | ChemuError::SingularGeometry(_) => 3,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, ChemuError>;
