use thiserror::Error;

use crate::domain::Point;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfiguration(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite numeric input: {0}")]
    NumericInput(String),

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("kernel is singular on the diagonal at {0:?}")]
    OnDiagonal(Point),

    #[error("evaluation point {point:?} lies within one grid cell ({cell:e}) of the boundary")]
    NearBoundary { point: Point, cell: f64 },

    #[error("time quadrature did not converge: tail estimate {estimate:e} exceeds {tolerance:e}")]
    QuadratureNonConvergence { estimate: f64, tolerance: f64 },

    #[error("rate fit: {0}")]
    FitDomain(String),

    #[error("trace strip unresolved: {0}")]
    Resolution(String),

    #[error("iteration did not converge after {iterations} iterations (last increment {increment:e})")]
    NonConvergence { iterations: usize, increment: f64 },

    #[error("invalid nonlinearity: {0}")]
    InvalidNonlinearity(String),

    #[error("supersolution inequality violated at node {node} (x = {point:?}): residual {residual:e}")]
    SupersolutionFailure {
        node: usize,
        point: Point,
        residual: f64,
    },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_order(s: f64) -> Result<()> {
    if s.is_finite() && s > 0.0 && s <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidConfiguration(format!(
            "order s = {s} outside (0, 1]"
        )))
    }
}

pub(crate) fn check_open_order(s: f64) -> Result<()> {
    if s.is_finite() && s > 0.0 && s < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidConfiguration(format!(
            "order s = {s} outside (0, 1)"
        )))
    }
}
