//! Max-stable limit laws and the limit laws of the k-th largest order statistic.
//!
//! With `G` one of the three max-stable laws and `v = -ln G(x)`, the k-th
//! extreme limit has distribution function `G(x) Σ_{i<k} v^i / i!` and
//! density `g(x) v^{k-1} / (k-1)!`. Everything here is written in terms of
//! `v`, which is what keeps the densities finite in log space at the edges
//! of the support.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::EntropyEstimate;
use crate::quadrature::{self, neg_p_ln_p, QuadratureResult, TailMap};
use crate::special::{harmonic, ln_factorial_minus_one, ln_gamma_unchecked, EULER_GAMMA};

/// One of the three max-stable types.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum LimitLaw {
    /// `Φ_α(x) = exp(-x^{-α})` on `x > 0`.
    Frechet { alpha: f64 },
    /// `Ψ_α(x) = exp(-(-x)^α)` on `x < 0`.
    Weibull { alpha: f64 },
    /// `Λ(x) = exp(-e^{-x})`.
    Gumbel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Frechet,
    Weibull,
    Gumbel,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Frechet => "frechet",
            Family::Weibull => "weibull",
            Family::Gumbel => "gumbel",
        })
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "frechet" | "fréchet" => Ok(Family::Frechet),
            "weibull" => Ok(Family::Weibull),
            "gumbel" => Ok(Family::Gumbel),
            other => Err(Error::domain(format!("unknown limit family '{other}'"))),
        }
    }
}

impl LimitLaw {
    pub fn frechet(alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(LimitLaw::Frechet { alpha })
    }

    pub fn weibull(alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(LimitLaw::Weibull { alpha })
    }

    /// Build from a family and an optional shape (ignored for Gumbel).
    pub fn from_family(family: Family, alpha: Option<f64>) -> Result<Self> {
        match family {
            Family::Gumbel => Ok(LimitLaw::Gumbel),
            Family::Frechet => {
                LimitLaw::frechet(alpha.ok_or_else(|| Error::domain("Fréchet law needs alpha"))?)
            }
            Family::Weibull => {
                LimitLaw::weibull(alpha.ok_or_else(|| Error::domain("Weibull law needs alpha"))?)
            }
        }
    }

    pub fn family(&self) -> Family {
        match self {
            LimitLaw::Frechet { .. } => Family::Frechet,
            LimitLaw::Weibull { .. } => Family::Weibull,
            LimitLaw::Gumbel => Family::Gumbel,
        }
    }

    pub fn alpha(&self) -> Option<f64> {
        match *self {
            LimitLaw::Frechet { alpha } | LimitLaw::Weibull { alpha } => Some(alpha),
            LimitLaw::Gumbel => None,
        }
    }

    /// Closed support `[lo, hi]`.
    pub fn support(&self) -> (f64, f64) {
        match self {
            LimitLaw::Frechet { .. } => (0.0, f64::INFINITY),
            LimitLaw::Weibull { .. } => (f64::NEG_INFINITY, 0.0),
            LimitLaw::Gumbel => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    /// `-ln G(x)`, in `[0, ∞]`.
    pub fn neg_ln_cdf(&self, x: f64) -> f64 {
        match *self {
            LimitLaw::Frechet { alpha } => {
                if x > 0.0 {
                    x.powf(-alpha)
                } else {
                    f64::INFINITY
                }
            }
            LimitLaw::Weibull { alpha } => {
                if x < 0.0 {
                    (-x).powf(alpha)
                } else {
                    0.0
                }
            }
            LimitLaw::Gumbel => (-x).exp(),
        }
    }

    /// Inverse of [`neg_ln_cdf`](Self::neg_ln_cdf) on the interior of the support.
    pub fn x_from_neg_ln_cdf(&self, v: f64) -> f64 {
        match *self {
            LimitLaw::Frechet { alpha } => v.powf(-1.0 / alpha),
            LimitLaw::Weibull { alpha } => -v.powf(1.0 / alpha),
            LimitLaw::Gumbel => -v.ln(),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        (-self.neg_ln_cdf(x)).exp()
    }

    pub fn ln_pdf(&self, x: f64) -> f64 {
        match *self {
            LimitLaw::Frechet { alpha } if x > 0.0 => alpha.ln() - (alpha + 1.0) * x.ln() - x.powf(-alpha),
            LimitLaw::Weibull { alpha } if x < 0.0 => {
                alpha.ln() + (alpha - 1.0) * (-x).ln() - (-x).powf(alpha)
            }
            LimitLaw::Gumbel => -x - (-x).exp(),
            _ if x.is_nan() => f64::NAN,
            _ => f64::NEG_INFINITY,
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.ln_pdf(x).exp()
    }

    /// Shannon entropy of the base law.
    pub fn entropy(&self) -> f64 {
        KExtremeLaw { law: *self, k: 1 }.entropy_closed_form()
    }
}

impl fmt::Display for LimitLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.alpha() {
            Some(alpha) => write!(f, "{}(alpha={alpha})", self.family()),
            None => write!(f, "{}", self.family()),
        }
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha.is_finite() && alpha > 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("shape alpha must be positive and finite, got {alpha}")))
    }
}

/// Values of `v = -ln G` used as quadrature breakpoints for rank `k`.
///
/// The k-th extreme density in the variable `v` is the Gamma(k) density, so
/// beyond the largest point the integrand is below `e^{-700}` and below the
/// smallest point lies a `v^k`-small tail handled by a half-line piece.
pub(crate) fn rank_breakpoints(k: u64) -> Vec<f64> {
    let kf = k as f64;
    let mut v = vec![
        1000.0 + 10.0 * kf,
        400.0 + 4.0 * kf,
        200.0 + 2.0 * kf,
        100.0 + kf,
        50.0 + kf,
        kf + 8.0 * kf.sqrt() + 10.0,
        kf + 4.0 * kf.sqrt() + 4.0,
        kf + 2.0 * kf.sqrt() + 1.0,
        kf,
        (kf - kf.sqrt()).max(0.5),
        (kf - 2.0 * kf.sqrt()).max(0.25),
        0.1,
        0.03,
        1e-2,
        1e-3,
        1e-4,
        1e-6,
        1e-8,
        1e-10,
        1e-12,
    ];
    v.sort_by(|a, b| b.total_cmp(a));
    v.dedup();
    v
}

/// The limit law of the k-th largest order statistic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KExtremeLaw {
    pub law: LimitLaw,
    pub k: u64,
}

impl KExtremeLaw {
    /// `k = 1` is accepted and gives the base law; the entropy results are
    /// usually stated for `k >= 2` but every formula here reduces correctly.
    pub fn new(law: LimitLaw, k: u64) -> Result<Self> {
        if k < 1 {
            return Err(Error::domain("rank k must be at least 1"));
        }
        if let Some(alpha) = law.alpha() {
            check_alpha(alpha)?;
        }
        Ok(KExtremeLaw { law, k })
    }

    /// Log-density `ln g^{(k)}(x)`; `-∞` outside the support.
    pub fn ln_pdf(&self, x: f64) -> f64 {
        let k = self.k as f64;
        let norm = ln_factorial_minus_one(self.k);
        match self.law {
            LimitLaw::Frechet { alpha } if x > 0.0 => {
                alpha.ln() - norm - (alpha * k + 1.0) * x.ln() - x.powf(-alpha)
            }
            LimitLaw::Weibull { alpha } if x < 0.0 => {
                alpha.ln() - norm + (alpha * k - 1.0) * (-x).ln() - (-x).powf(alpha)
            }
            LimitLaw::Gumbel => -norm - k * x - (-x).exp(),
            _ if x.is_nan() => f64::NAN,
            _ => f64::NEG_INFINITY,
        }
    }

    /// Density `g^{(k)}(x) = g(x) (-ln G(x))^{k-1} / (k-1)!`.
    pub fn pdf(&self, x: f64) -> Result<f64> {
        if x.is_nan() {
            return Err(Error::domain("density evaluated at NaN"));
        }
        Ok(self.ln_pdf(x).exp())
    }

    /// Distribution function `G(x) Σ_{i=0}^{k-1} (-ln G(x))^i / i!`.
    pub fn cdf(&self, x: f64) -> f64 {
        poisson_lower_tail(self.k, self.law.neg_ln_cdf(x))
    }

    /// Inverse of [`cdf`](Self::cdf), accurate to about one ulp in `v = -ln G`.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::domain(format!("quantile level must lie in (0, 1), got {p}")));
        }
        // base-law root is a lower bound: the tail sum only grows with k
        let mut lo = -p.ln();
        let mut hi = 2.0 * lo + 1.0;
        while poisson_lower_tail(self.k, hi) > p {
            lo = hi;
            hi *= 2.0;
            if !hi.is_finite() {
                return Err(Error::numeric("quantile bracket overflow"));
            }
        }
        for _ in 0..2000 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if poisson_lower_tail(self.k, mid) > p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let lo_gap = (poisson_lower_tail(self.k, lo) - p).abs();
        let hi_gap = (poisson_lower_tail(self.k, hi) - p).abs();
        let v = if lo_gap <= hi_gap { lo } else { hi };
        Ok(self.law.x_from_neg_ln_cdf(v))
    }

    /// Closed-form Shannon entropy of the k-th extreme limit law.
    pub fn entropy_closed_form(&self) -> f64 {
        let k = self.k as f64;
        let digamma = harmonic(self.k - 1) - EULER_GAMMA;
        let ln_fact = ln_factorial_minus_one(self.k);
        match self.law {
            LimitLaw::Frechet { alpha } => -alpha.ln() + ln_fact - (alpha * k + 1.0) / alpha * digamma + k,
            LimitLaw::Weibull { alpha } => -alpha.ln() + ln_fact - (alpha * k - 1.0) / alpha * digamma + k,
            LimitLaw::Gumbel => ln_fact - k * digamma + k,
        }
    }

    /// Breakpoints in `x` covering the support, ascending.
    fn breakpoints(&self) -> Vec<f64> {
        let (lo, hi) = self.law.support();
        let mut points = vec![lo];
        points.extend(rank_breakpoints(self.k).into_iter().map(|v| self.law.x_from_neg_ln_cdf(v)));
        points.push(hi);
        points.dedup();
        points
    }

    /// `∫ h(x, ln g(x)) dx` over the support.
    pub fn integrate_with_density<H>(&self, h: H, tol: f64) -> Result<QuadratureResult>
    where
        H: Fn(f64, f64) -> f64,
    {
        let integrand = |x: f64| {
            let lp = self.ln_pdf(x);
            if lp == f64::NEG_INFINITY {
                0.0
            } else {
                h(x, lp)
            }
        };
        quadrature::integrate_breakpoints(integrand, &self.breakpoints(), tol, TailMap::Stretched)
    }

    /// `-∫ g ln g` by adaptive quadrature, independent of the closed form.
    pub fn entropy_quadrature(&self, tol: f64) -> Result<EntropyEstimate> {
        if !(tol > 0.0) {
            return Err(Error::domain("tolerance must be positive"));
        }
        let r = self.integrate_with_density(|_, lp| neg_p_ln_p(lp), tol)?.require_converged(tol)?;
        Ok(EntropyEstimate::quadrature(r.value, r.error_bound))
    }
}

impl fmt::Display for KExtremeLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} k={}", self.law, self.k)
    }
}

/// `P(Poisson(v) <= k-1) = e^{-v} Σ_{i<k} v^i / i!`, summed largest term first
/// with compensation.
pub(crate) fn poisson_lower_tail(k: u64, v: f64) -> f64 {
    if v.is_nan() {
        return f64::NAN;
    }
    if v <= 0.0 {
        return 1.0;
    }
    if v == f64::INFINITY {
        return 0.0;
    }
    let ln_v = v.ln();
    let mut terms: Vec<f64> =
        (0..k).map(|i| (-v + i as f64 * ln_v - ln_gamma_unchecked(i as f64 + 1.0)).exp()).collect();
    terms.sort_by(|a, b| b.total_cmp(a));
    let mut sum = 0.0_f64;
    let mut comp = 0.0_f64;
    for t in terms {
        let s = sum + t;
        if sum >= t {
            comp += (sum - s) + t;
        } else {
            comp += (t - s) + sum;
        }
        sum = s;
    }
    (sum + comp).clamp(0.0, 1.0)
}
