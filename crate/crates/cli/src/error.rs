use std::path::PathBuf;

use supermode_core::{SolveError, ValidationReport};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("parse error at `{path}` (line {line}, column {column}): {message}")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid scenario: {0}")]
    Validation(ValidationReport),
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error("oracle mismatch at {count} point(s); worst relative discrepancy {worst:.3e} exceeds {tolerance:.3e}")]
    OracleMismatch { count: usize, worst: f64, tolerance: f64 },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    /// Process exit status for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse { .. } | CliError::Validation(_) | CliError::UnknownPreset(_) => 2,
            // A model that validates but cannot be solved is still an input problem.
            CliError::Solve(_) => 2,
            CliError::OracleMismatch { .. } => 3,
            CliError::Io { .. } => 4,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}
