use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The density is singular at the origin for this dimension.
    #[error("density pole: sample {index} is the zero vector (dimension {dim} >= 2)")]
    Pole { index: usize, dim: usize },

    /// The result exists but is not representable as a finite f64.
    #[error("result out of range for nu = {nu}, x = {x}; use the log-domain variant")]
    OutOfRange { nu: f64, x: f64 },

    #[error("matrix is not symmetric positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid weight {value} at sample {index}: weights must be finite and >= 1e-300")]
    InvalidWeight { index: usize, value: f64 },

    #[error("quadrature did not converge (estimate {estimate:e}, error bound {error_bound:e})")]
    Quadrature { estimate: f64, error_bound: f64 },

    #[error("model and data are incompatible: {0}")]
    ModelMismatch(String),

    #[error("optimizer report is not converged: {0}")]
    NotConverged(String),

    /// The stability verdict could not be decided within the iteration budget.
    #[error("inconclusive stability verdict after {iterations} iterations (value {value:e}, residual {residual:e}, condition {condition:e})")]
    Inconclusive { iterations: usize, value: f64, residual: f64, condition: f64 },
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
