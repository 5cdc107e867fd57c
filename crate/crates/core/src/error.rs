use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate mixture: {0}")]
    DegenerateMixture(String),

    #[error("precondition violated: {0}")]
    PreconditionViolation(String),

    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),

    #[error("unsupported method: {0}")]
    UnsupportedMethod(String),

    #[error("numerical degeneracy: {0}")]
    NumericalDegeneracy(String),

    #[error("no solution found: {0}")]
    NotFound(String),

    #[error("degenerate solution: {0}")]
    DegenerateSolution(String),

    /// The candidate point already matches the next moment, so the
    /// multiplicity rule does not apply.
    #[error("point lies on the next moment variety: {0}")]
    OnVariety(String),

    #[error("not a critical point: {0}")]
    NotACriticalPoint(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
