use serde::{Deserialize, Serialize};

/// How an entropy value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EntropyMethod {
    ClosedForm,
    Quadrature,
    SpacingMc,
}

/// An entropy value together with its provenance and uncertainty.
///
/// `error_bound` is the absolute quadrature bound for [`EntropyMethod::Quadrature`],
/// zero for closed forms, and the half-width of `ci` for Monte Carlo estimates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropyEstimate {
    pub value: f64,
    pub method: EntropyMethod,
    pub error_bound: f64,
    pub ci: Option<(f64, f64)>,
}

impl EntropyEstimate {
    pub fn closed_form(value: f64) -> Self {
        EntropyEstimate { value, method: EntropyMethod::ClosedForm, error_bound: 0.0, ci: None }
    }

    pub fn quadrature(value: f64, error_bound: f64) -> Self {
        EntropyEstimate { value, method: EntropyMethod::Quadrature, error_bound, ci: None }
    }

    /// True when `target` lies inside the confidence interval, or within the
    /// error bound when no interval is attached.
    pub fn covers(&self, target: f64) -> bool {
        match self.ci {
            Some((lo, hi)) => lo <= target && target <= hi,
            None => (self.value - target).abs() <= self.error_bound,
        }
    }
}
