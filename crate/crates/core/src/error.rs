use thiserror::Error;

/// Errors raised by the verification library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("ellipticity bounds out of order: lambda = {lambda} > Lambda = {big_lambda}")]
    Ordering { lambda: f64, big_lambda: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("coefficient matrix is not symmetric at {point:?} (asymmetry {asymmetry:e})")]
    Symmetry { point: Vec<f64>, asymmetry: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("unsupported family: {0}")]
    Unsupported(String),

    #[error("capability missing: {0}")]
    Capability(String),

    #[error("linear solver failed after {iterations} iterations (relative residual {residual:e})")]
    SolverFailure { iterations: usize, residual: f64 },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_bounds(lambda: f64, big_lambda: f64) -> Result<()> {
    if !(lambda.is_finite() && big_lambda.is_finite()) || lambda <= 0.0 {
        return Err(Error::Domain(format!(
            "ellipticity bounds must be positive and finite (lambda = {lambda}, Lambda = {big_lambda})"
        )));
    }
    if lambda > big_lambda {
        return Err(Error::Ordering { lambda, big_lambda });
    }
    Ok(())
}
