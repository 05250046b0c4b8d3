use thiserror::Error;

use crate::quadrature::QuadratureResult;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A numerical procedure produced a non-finite or otherwise unusable value.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// Adaptive quadrature hit its subdivision cap before meeting the tolerance.
    #[error(
        "quadrature did not converge: value {value:e}, error bound {error_bound:e} > tol {tol:e} \
         after {intervals} subintervals (worst [{worst_lo:e}, {worst_hi:e}])",
        value = .0.value, error_bound = .0.error_bound, tol = .1,
        intervals = .0.intervals, worst_lo = .0.worst_interval.0, worst_hi = .0.worst_interval.1
    )]
    Quadrature(QuadratureResult, f64),

    /// The sample-based entropy estimator could not be evaluated.
    #[error("estimator error: {0}")]
    Estimator(String),

    /// A parent could not be placed in a max domain of attraction.
    #[error("classification failed: {0}")]
    Classification(String),

    /// A parent distribution specification string could not be parsed.
    #[error("invalid parent specification: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }
}
