use thiserror::Error;

use crate::dynamics::Trajectory;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },

    #[error("unknown identifier `{name}` at offset {offset}")]
    UnknownIdentifier { name: String, offset: usize },

    #[error("invalid coordinate list: {0}")]
    Coordinates(String),

    #[error("domain violation: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("derivative of order {0} is not available for this field")]
    OrderUnavailable(usize),

    #[error("structure matrix is not skew-symmetric: J[{i}][{j}] + J[{j}][{i}] = {residual:e} at {point:?}")]
    SkewViolation {
        i: usize,
        j: usize,
        residual: f64,
        point: Vec<f64>,
    },

    #[error("invalid metric: {0}")]
    Metric(String),

    #[error("singular jacobian at iteration {iteration}")]
    SingularJacobian { iteration: usize },

    #[error("structure matrix is degenerate (|det J| = {det:e}); residual of J·DH is {residual:e}")]
    DegenerateStructure { det: f64, residual: f64 },

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("integration stopped at t = {time}: {reason}")]
    BlowUp {
        time: f64,
        reason: String,
        partial: Box<Trajectory>,
    },

    #[error("invalid settings: {0}")]
    Settings(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// True for failures caused by non-finite or out-of-domain arithmetic.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Domain(_) | Error::BlowUp { .. } | Error::SingularJacobian { .. }
        )
    }
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::Dimension { expected, got });
    }
    Ok(())
}
