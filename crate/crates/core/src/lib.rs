//! Entropy of linearly normalized k-th extremes.
//!
//! The crate covers the three max-stable limit laws and their k-th extreme
//! variants, parent distributions classified into max domains of attraction,
//! the finite-n density of the normalized k-th largest order statistic, and
//! two independent routes to its Shannon entropy: adaptive quadrature and a
//! Monte Carlo spacing estimator.
//!
//! ```
//! use kext_core::laws::{KExtremeLaw, LimitLaw};
//!
//! let law = KExtremeLaw::new(LimitLaw::Gumbel, 2).unwrap();
//! let h = law.entropy_closed_form();
//! assert!((h - 2.0 * kext_core::special::EULER_GAMMA).abs() < 1e-14);
//! ```

// NaN must fail range checks, so `!(a < b)` is deliberate throughout.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod estimate;
pub mod finite;
pub mod laws;
pub mod parent;
pub mod quadrature;
pub mod sampling;
pub mod special;

pub use error::{Error, Result};
pub use estimate::{EntropyEstimate, EntropyMethod};

/// Render a float with 17 significant digits (`d.dddddddddddddddde±x`), which
/// round-trips every `f64` exactly. Non-finite values print as `NaN`, `inf`, `-inf`.
pub fn format_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}
