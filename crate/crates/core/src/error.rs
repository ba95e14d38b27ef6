use thiserror::Error;

use crate::model::ValidationReport;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("chain must contain at least one subsystem")]
    EmptyChain,
    #[error("invalid parameters: {0}")]
    Invalid(ValidationReport),
}

/// Failures of the numerical solvers.
#[derive(Debug, Error)]
pub enum SolveError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("singular steady-state system (|det| = {determinant:e})")]
    Singular { determinant: f64 },
    #[error(
        "subsystem {index} is opaque (|t| = {magnitude:e}); transfer matrices are singular here, \
         use the full-system oracle"
    )]
    Opaque { index: usize, magnitude: f64 },
    #[error("degenerate chain matrix (|m22| = {magnitude:e})")]
    DegenerateChain { magnitude: f64 },
    #[error("coupled system is singular or ill-conditioned (condition estimate {condition:e})")]
    IllConditioned { condition: f64 },
    #[error("pathway enumeration exceeded the cap of {cap} pathways")]
    TooManyPathways { cap: usize },
    #[error("max_bounces must be even, got {0}")]
    OddBounces(usize),
    #[error("reflection amplitude is zero; its phase is undefined")]
    UndefinedPhase,
    #[error("chain has {n} subsystems, more than the configuration cap of {cap}")]
    TooManyConfigurations { n: usize, cap: usize },
    #[error("spectrum grid does not match candidate `{label}`")]
    GridMismatch { label: String },
    #[error("no candidates to classify against")]
    NoCandidates,
    #[error("chain-length scan needs at least one count, each >= 2")]
    BadLengthRange,
}
