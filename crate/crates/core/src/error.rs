use thiserror::Error;

use crate::schemes::NewtonReport;

/// Errors raised by the geometric, group, scheme and analysis routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid spacing: {0}")]
    InvalidSpacing(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("singular transform: {0}")]
    SingularTransform(String),

    #[error("order violation: transformed abscissas are not strictly increasing")]
    OrderViolation,

    #[error("transformed curve is not a graph over x")]
    NotAGraph,

    #[error("degenerate stencil: {0}")]
    DegenerateStencil(String),

    #[error("degenerate jet: {0}")]
    DegenerateJet(String),

    #[error("domain violation: {0}")]
    DomainViolation(String),

    #[error("blow-up: {0}")]
    BlowUp(String),

    #[error("Newton iteration diverged after {} iterations (residual {:e})", .0.iterations, .0.residual_norm)]
    NewtonDiverged(NewtonReport),

    #[error("ill-conditioned fit (condition estimate {0:e})")]
    IllConditionedFit(f64),
}

pub type Result<T> = std::result::Result<T, Error>;
