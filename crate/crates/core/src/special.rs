//! Special functions shared by the entropy formulas.

use crate::error::{Error, Result};

/// Euler–Mascheroni constant.
#[allow(clippy::excessive_precision)]
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_860_6;

/// Largest index summed term by term in [`harmonic`]; beyond it the
/// asymptotic expansion is used.
pub const HARMONIC_DIRECT_LIMIT: u64 = 10_000_000;

/// Natural log of the gamma function for `x > 0`.
pub fn log_gamma(x: f64) -> Result<f64> {
    if x.is_nan() || x <= 0.0 {
        return Err(Error::domain(format!("log_gamma requires x > 0, got {x}")));
    }
    Ok(ln_gamma_unchecked(x))
}

#[inline]
pub(crate) fn ln_gamma_unchecked(x: f64) -> f64 {
    libm::lgamma(x)
}

/// `ln (k-1)!`, i.e. `ln Γ(k)` for a positive integer rank.
pub(crate) fn ln_factorial_minus_one(k: u64) -> f64 {
    if k <= 1 {
        return 0.0;
    }
    if k <= 21 {
        let mut acc = 1.0_f64;
        for i in 2..k {
            acc *= i as f64;
        }
        return acc.ln();
    }
    ln_gamma_unchecked(k as f64)
}

/// Partial harmonic sum `H_k = 1 + 1/2 + ... + 1/k`, with `H_0 = 0`.
pub fn harmonic(k: u64) -> f64 {
    if k == 0 {
        return 0.0;
    }
    if k > HARMONIC_DIRECT_LIMIT {
        let x = k as f64;
        let inv2 = 1.0 / (x * x);
        return x.ln() + EULER_GAMMA + 0.5 / x - inv2 / 12.0 + inv2 * inv2 / 120.0;
    }
    // smallest terms first
    let mut sum = 0.0_f64;
    let mut comp = 0.0_f64;
    for i in (1..=k).rev() {
        let term = 1.0 / i as f64;
        let t = sum + term;
        if sum.abs() >= term {
            comp += (sum - t) + term;
        } else {
            comp += (term - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Log-moment integral `A(k) = ∫₀^∞ u^{k-1} e^{-u} ln u du = (k-1)! (H_{k-1} - γ)`.
pub fn a_integral(k: u64) -> Result<f64> {
    if k < 1 {
        return Err(Error::domain("A(k) requires k >= 1"));
    }
    let digamma = harmonic(k - 1) - EULER_GAMMA;
    Ok(ln_factorial_minus_one(k).exp() * digamma)
}

/// `ln B(n, k)` where `B(n, k) = Beta(n-k+1, k) = (k-1)!(n-k)!/n!`.
pub fn log_beta(n: u64, k: u64) -> Result<f64> {
    if k < 1 || k > n {
        return Err(Error::domain(format!("log_beta requires 1 <= k <= n, got n={n}, k={k}")));
    }
    Ok(log_beta_unchecked(n, k))
}

pub(crate) fn log_beta_unchecked(n: u64, k: u64) -> f64 {
    // n!/(n-k)! has k factors and n!/(k-1)! has n-k+1; use the shorter product.
    const PRODUCT_LIMIT: u64 = 4096;
    let upper = k;
    let lower = n - k + 1;
    if upper <= lower && upper <= PRODUCT_LIMIT {
        let ln_falling: f64 = (0..k).map(|i| ((n - i) as f64).ln()).sum();
        ln_factorial_minus_one(k) - ln_falling
    } else if lower <= PRODUCT_LIMIT {
        let ln_rising: f64 = (k..=n).map(|i| (i as f64).ln()).sum();
        ln_factorial_minus_one(n - k + 1) - ln_rising
    } else {
        ln_gamma_unchecked(k as f64) + ln_gamma_unchecked((n - k + 1) as f64)
            - ln_gamma_unchecked(n as f64 + 1.0)
    }
}
