//! The normalized k-th largest order statistic at finite `n`.
//!
//! For a parent `F` with density `f` and norming constants `(a_n, b_n)`,
//! `(X_{n-k+1:n} - b_n)/a_n` has density
//!
//! ```text
//! g_n^(k)(x) = a_n f(y) F(y)^{n-k} F̄(y)^{k-1} / B(n, k),   y = a_n x + b_n,
//! ```
//!
//! with `B(n, k) = (k-1)!(n-k)!/n!`. Everything is evaluated in log space, so
//! `n` in the millions is fine.
//!
//! Substituting `t = F(y)` splits the entropy as `h(g_n^(k)) = -(I₁(n) + I₂(n))`
//! where `I₁(n)` is parent-free ([`i1_exact`]) and
//! `I₂(n) = ∫ g_n^(k)(x) ln(n a_n f(a_n x + b_n)) dx` carries the parent.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::EntropyEstimate;
use crate::laws::{rank_breakpoints, KExtremeLaw};
use crate::parent::{self, DomainTag, NormingConstants, ParentDistribution};
use crate::quadrature::{self, neg_p_ln_p, QuadratureResult, TailMap};
use crate::special::{harmonic, ln_factorial_minus_one, log_beta_unchecked, EULER_GAMMA};

/// Default `n` schedule for convergence runs.
pub const DEFAULT_SCHEDULE: [u64; 4] = [100, 1_000, 10_000, 100_000];

/// Parent, sample size, rank and norming constants.
///
/// `k = 1` (the maximum) is allowed throughout; the entropy convergence
/// results are usually stated for `k >= 2`. `k = n` (the sample minimum) is
/// accepted too, the density formula being valid there.
#[derive(Debug, Clone)]
pub struct FiniteModel {
    parent: ParentDistribution,
    n: u64,
    k: u64,
    norm: NormingConstants,
    tag: DomainTag,
    ln_const: f64,
}

impl FiniteModel {
    /// Classify the parent (analytic tag if known, von Mises check otherwise)
    /// and compute the matching norming constants.
    pub fn new(parent: ParentDistribution, n: u64, k: u64) -> Result<Self> {
        check_rank(n, k)?;
        let tag = domain_of(&parent)?;
        let norm = parent::norming_constants(&parent, tag, n)?;
        Self::with_norming(parent, k, norm, tag)
    }

    /// Use explicit norming constants; `norm.n` is the sample size.
    pub fn with_norming(
        parent: ParentDistribution,
        k: u64,
        norm: NormingConstants,
        tag: DomainTag,
    ) -> Result<Self> {
        let n = norm.n;
        check_rank(n, k)?;
        if !(norm.a_n > 0.0 && norm.a_n.is_finite() && norm.b_n.is_finite()) {
            return Err(Error::domain("norming constants need a_n > 0 and finite b_n"));
        }
        let ln_const = norm.a_n.ln() - log_beta_unchecked(n, k);
        Ok(FiniteModel { parent, n, k, norm, tag, ln_const })
    }

    pub fn parent(&self) -> &ParentDistribution {
        &self.parent
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn k(&self) -> u64 {
        self.k
    }

    pub fn norm(&self) -> &NormingConstants {
        &self.norm
    }

    pub fn domain(&self) -> DomainTag {
        self.tag
    }

    /// The limit law this model converges to.
    pub fn limit(&self) -> Result<KExtremeLaw> {
        let law = self
            .tag
            .limit_law()
            .ok_or_else(|| Error::Classification(format!("{}: no limit law", self.parent)))?;
        KExtremeLaw::new(law, self.k)
    }

    /// `ln g_n^(k)(x)`; `-∞` where `a_n x + b_n` leaves the parent support.
    pub fn ln_pdf(&self, x: f64) -> f64 {
        let y = self.norm.denormalize(x);
        let (l, r) = self.parent.support();
        if !(y >= l && y <= r) {
            return f64::NEG_INFINITY;
        }
        let ln_f = self.parent.ln_pdf(y);
        if ln_f == f64::NEG_INFINITY {
            return ln_f;
        }
        let mut acc = self.ln_const + ln_f;
        if self.n > self.k {
            acc += (self.n - self.k) as f64 * self.parent.ln_cdf(y);
        }
        if self.k > 1 {
            acc += (self.k - 1) as f64 * self.parent.ln_sf(y);
        }
        acc
    }

    /// Density `g_n^(k)(x)`.
    pub fn pdf(&self, x: f64) -> f64 {
        self.ln_pdf(x).exp()
    }

    /// Ascending breakpoints in `x` that bracket the bulk of the mass.
    ///
    /// Points are placed at fixed values of `v = n F̄(y)`, which is roughly
    /// Gamma(k)-distributed whatever the parent. Below `v = 1000 + 10k` the
    /// density is under `e^{-700}` and the range is dropped.
    fn breakpoints(&self) -> Result<Vec<f64>> {
        let (l, r) = self.parent.support();
        let nf = self.n as f64;
        let lower = self.norm.normalize(l);
        let upper = self.norm.normalize(r);
        let vs = rank_breakpoints(self.k);
        let mut points = Vec::with_capacity(vs.len() + 2);
        if vs[0] >= nf {
            points.push(lower);
        }
        for v in vs.into_iter().filter(|&v| v < nf) {
            let x = self.norm.normalize(self.parent.inverse_sf(v / nf)?);
            if points.last().is_none_or(|&p| x > p) && x < upper {
                points.push(x);
            }
        }
        points.push(upper);
        Ok(points)
    }

    /// `∫ h(x, ln g_n^(k)(x)) dx` over the normalized support.
    pub fn integrate_with_density<H>(&self, h: H, tol: f64) -> Result<QuadratureResult>
    where
        H: Fn(f64, f64) -> f64,
    {
        if !(tol > 0.0) {
            return Err(Error::domain("tolerance must be positive"));
        }
        let integrand = |x: f64| {
            let lp = self.ln_pdf(x);
            if lp == f64::NEG_INFINITY {
                0.0
            } else {
                h(x, lp)
            }
        };
        quadrature::integrate_breakpoints(integrand, &self.breakpoints()?, tol, TailMap::Stretched)
    }

    /// `∫ g_n^(k)`, which should be 1.
    pub fn total_mass(&self, tol: f64) -> Result<QuadratureResult> {
        self.integrate_with_density(|_, lp| lp.exp(), tol)?.require_converged(tol)
    }

    /// `h(g_n^(k)) = -∫ g ln g` to absolute tolerance `tol`.
    pub fn entropy(&self, tol: f64) -> Result<EntropyEstimate> {
        let r = self.integrate_with_density(|_, lp| neg_p_ln_p(lp), tol)?.require_converged(tol)?;
        Ok(EntropyEstimate::quadrature(r.value, r.error_bound))
    }

    /// `I₂(n) = ∫ g_n^(k)(x) ln(n a_n f(a_n x + b_n)) dx` by direct quadrature.
    #[doc(hidden)]
    pub fn i2_quadrature(&self, tol: f64) -> Result<f64> {
        let shift = (self.n as f64).ln() + self.norm.a_n.ln();
        let r = self
            .integrate_with_density(
                |x, lp| {
                    let p = lp.exp();
                    if p == 0.0 {
                        0.0
                    } else {
                        p * (shift + self.parent.ln_pdf(self.norm.denormalize(x)))
                    }
                },
                tol,
            )?
            .require_converged(tol)?;
        Ok(r.value)
    }
}

fn check_rank(n: u64, k: u64) -> Result<()> {
    if n < 2 || k < 1 || k > n {
        return Err(Error::domain(format!("need n >= 2 and 1 <= k <= n, got n={n}, k={k}")));
    }
    Ok(())
}

/// Analytic domain if the parent declares one, otherwise the von Mises check.
pub fn domain_of(parent: &ParentDistribution) -> Result<DomainTag> {
    let tag = match parent.analytic_domain() {
        Some(tag) => tag,
        None => parent::classify(parent)?,
    };
    if tag == DomainTag::Unknown {
        return Err(Error::Classification(format!("{parent}: no max domain of attraction detected")));
    }
    Ok(tag)
}

/// `h(g_n^(k))` for a model.
pub fn entropy_gnk(model: &FiniteModel, tol: f64) -> Result<EntropyEstimate> {
    model.entropy(tol)
}

/// `g_n^(k)(x)` for a model.
pub fn pdf_gnk(model: &FiniteModel, x: f64) -> f64 {
    model.pdf(x)
}

/// Pre-limit parent-free term
///
/// ```text
/// I₁(n) = ln(Π_{i=1}^k (1 - (i-1)/n) / Γ(k)) - Σ_{i=1}^k (n-k)/(n-k+i) - (k-1)(H_n - H_{k-1} - ln n),
/// ```
///
/// the negative entropy of `n(1 - T)` with `T ~ Beta(n-k+1, k)`.
pub fn i1_exact(n: u64, k: u64) -> Result<f64> {
    if k < 1 || k >= n {
        return Err(Error::domain(format!("I1 needs 1 <= k <= n-1, got n={n}, k={k}")));
    }
    let nf = n as f64;
    let ln_prod: f64 = (1..=k).map(|i| (-((i - 1) as f64) / nf).ln_1p()).sum();
    let m = (n - k) as f64;
    let ratio_sum: f64 = (1..=k).map(|i| m / (m + i as f64)).sum();
    let tail = (k - 1) as f64 * (harmonic_tail(n, k) - nf.ln());
    Ok(ln_prod - ln_factorial_minus_one(k) - ratio_sum - tail)
}

/// `H_n - H_{k-1}`, summed directly for moderate `n`.
fn harmonic_tail(n: u64, k: u64) -> f64 {
    if n <= 1_000_000 {
        (k..=n).rev().map(|i| 1.0 / i as f64).sum()
    } else {
        harmonic(n) - harmonic(k - 1)
    }
}

/// `lim I₁(n) = -ln Γ(k) - k - (k-1)(γ - H_{k-1})`.
pub fn i1_limit(k: u64) -> Result<f64> {
    if k < 1 {
        return Err(Error::domain("rank k must be at least 1"));
    }
    let kf = k as f64;
    Ok(-ln_factorial_minus_one(k) - kf - (kf - 1.0) * (EULER_GAMMA - harmonic(k - 1)))
}

/// `max_x |f(x) - g(x)|` over `grid`.
pub fn sup_gap<F, G>(grid: &[f64], f: F, g: G) -> Result<f64>
where
    F: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
{
    if grid.is_empty() {
        return Err(Error::domain("density gap needs a nonempty grid"));
    }
    let mut worst: f64 = 0.0;
    for &x in grid {
        let d = (f(x) - g(x)).abs();
        if d.is_nan() {
            return Err(Error::numeric(format!("density gap is not finite at x={x}")));
        }
        worst = worst.max(d);
    }
    Ok(worst)
}

/// Sup-norm gap between `g_n^(k)` and the limit density on `grid`.
pub fn sup_density_gap(model: &FiniteModel, law: &KExtremeLaw, grid: &[f64]) -> Result<f64> {
    sup_gap(grid, |x| model.pdf(x), |x| law.ln_pdf(x).exp())
}

/// `count` evenly spaced points between `G^{-1}(0.01)` and `G^{-1}(0.99)`
/// of the base max-stable law.
pub fn default_sup_grid(law: &KExtremeLaw, count: usize) -> Vec<f64> {
    let lo = law.law.x_from_neg_ln_cdf(-(0.01f64).ln());
    let hi = law.law.x_from_neg_ln_cdf(-(0.99f64).ln());
    if count < 2 {
        return vec![0.5 * (lo + hi)];
    }
    (0..count).map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64).collect()
}

/// One schedule entry of a [`ConvergenceReport`]. Numeric fields are `None`
/// when that entry failed; `status` then carries the reason.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceEntry {
    pub n: u64,
    pub a_n: Option<f64>,
    pub b_n: Option<f64>,
    pub entropy: Option<f64>,
    pub quad_error: Option<f64>,
    /// `|h(g_n^(k)) - h(g^(k))|`.
    pub gap: Option<f64>,
    pub sup_gap: Option<f64>,
    pub status: String,
}

/// Entropies and density gaps of `g_n^(k)` along a schedule of `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub parent: String,
    pub domain: DomainTag,
    pub law: KExtremeLaw,
    pub target: f64,
    pub entries: Vec<ConvergenceEntry>,
}

impl ConvergenceReport {
    pub fn schedule(&self) -> Vec<u64> {
        self.entries.iter().map(|e| e.n).collect()
    }

    pub fn all_ok(&self) -> bool {
        self.entries.iter().all(|e| e.status == "ok")
    }

    fn strictly_decreasing(values: impl Iterator<Item = Option<f64>>) -> bool {
        let values: Option<Vec<f64>> = values.collect();
        values.is_some_and(|v| v.windows(2).all(|w| w[1] < w[0]))
    }

    /// Entropy gaps strictly decrease along the schedule (and every entry succeeded).
    pub fn gaps_decreasing(&self) -> bool {
        Self::strictly_decreasing(self.entries.iter().map(|e| e.gap))
    }

    pub fn sup_gaps_decreasing(&self) -> bool {
        Self::strictly_decreasing(self.entries.iter().map(|e| e.sup_gap))
    }
}

/// Compute `h(g_n^(k))` and the sup density gap for every `n` in `schedule`.
///
/// Entries are evaluated in parallel and assembled in schedule order; the
/// result does not depend on scheduling. A failing entry does not abort the
/// report: its status records the error. Setup failures (classification,
/// invalid schedule) are returned as errors.
pub fn convergence_report(
    parent: &ParentDistribution,
    k: u64,
    schedule: &[u64],
    grid: Option<&[f64]>,
    tol: f64,
) -> Result<ConvergenceReport> {
    if schedule.is_empty() {
        return Err(Error::domain("schedule is empty"));
    }
    if schedule.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::domain("schedule must be strictly increasing"));
    }
    check_rank(schedule[0], k)?;
    if !(tol > 0.0) {
        return Err(Error::domain("tolerance must be positive"));
    }
    let tag = domain_of(parent)?;
    let law = KExtremeLaw::new(tag.limit_law().expect("classified"), k)?;
    let target = law.entropy_closed_form();
    let default_grid;
    let grid = match grid {
        Some(g) => g,
        None => {
            default_grid = default_sup_grid(&law, 200);
            &default_grid
        }
    };
    if grid.is_empty() {
        return Err(Error::domain("density gap needs a nonempty grid"));
    }

    let entries = schedule
        .par_iter()
        .map(|&n| {
            let mut entry = ConvergenceEntry {
                n,
                a_n: None,
                b_n: None,
                entropy: None,
                quad_error: None,
                gap: None,
                sup_gap: None,
                status: "ok".into(),
            };
            let run = |entry: &mut ConvergenceEntry| -> Result<()> {
                let norm = parent::norming_constants(parent, tag, n)?;
                entry.a_n = Some(norm.a_n);
                entry.b_n = Some(norm.b_n);
                let model = FiniteModel::with_norming(parent.clone(), k, norm, tag)?;
                entry.sup_gap = Some(sup_density_gap(&model, &law, grid)?);
                let h = model.entropy(tol)?;
                entry.entropy = Some(h.value);
                entry.quad_error = Some(h.error_bound);
                entry.gap = Some((h.value - target).abs());
                Ok(())
            };
            if let Err(e) = run(&mut entry) {
                entry.status = e.to_string();
            }
            entry
        })
        .collect();

    Ok(ConvergenceReport { parent: parent.spec(), domain: tag, law, target, entries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn model(spec: &str, n: u64, k: u64) -> FiniteModel {
        FiniteModel::new(ParentDistribution::parse(spec).unwrap(), n, k).unwrap()
    }

    #[test]
    fn pdf_examples() {
        let m = model("pareto:alpha=1", 2, 2);
        assert_relative_eq!(m.pdf(1.0), 0.5, max_relative = 1e-14);
        assert_relative_eq!(model("pareto:alpha=1", 2, 1).pdf(1.0), 0.5, max_relative = 1e-14);
        // a_2 = 2 so y = 2x; below x = 1/2 lies outside [1, ∞)
        assert_eq!(m.pdf(0.4), 0.0);
        assert_eq!(model("uniform", 10, 2).pdf(0.5), 0.0);
    }

    #[test]
    fn pdf_matches_direct_formula() {
        // n = 5, k = 2 exponential: 5!/(1! 3!) = 20
        let m = model("exp", 5, 2);
        let b = m.norm().b_n;
        for x in [-1.0, 0.0, 0.7, 3.0] {
            let y = x + b;
            let want = 20.0 * (-y).exp() * (1.0 - (-y).exp()).powi(3) * (-y).exp();
            assert_relative_eq!(m.pdf(x), want, max_relative = 1e-12);
        }
    }

    #[test]
    fn rejects_invalid_rank() {
        let p = ParentDistribution::parse("exp").unwrap();
        assert!(FiniteModel::new(p.clone(), 10, 11).is_err());
        assert!(FiniteModel::new(p.clone(), 10, 0).is_err());
        assert!(FiniteModel::new(p, 1, 1).is_err());
        assert!(i1_exact(3, 3).is_err());
    }

    #[test]
    fn entropy_pareto_two_two() {
        let h = model("pareto:alpha=1", 2, 2).entropy(1e-11).unwrap();
        assert!((h.value - (1.5 - 2.0 * 2f64.ln())).abs() < 1e-10, "{}", h.value);
    }

    #[test]
    fn entropy_is_affine_in_scale() {
        let m = model("pareto:alpha=2", 50, 3);
        let norm = *m.norm();
        let doubled = NormingConstants::new(norm.n, 2.0 * norm.a_n, norm.b_n).unwrap();
        let m2 = FiniteModel::with_norming(m.parent().clone(), 3, doubled, m.domain()).unwrap();
        let h1 = m.entropy(1e-11).unwrap().value;
        let h2 = m2.entropy(1e-11).unwrap().value;
        assert!((h2 - h1 + 2f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn i1_examples() {
        assert!((i1_exact(10, 2).unwrap() + 1.420_633_5).abs() < 1e-6);
        assert_relative_eq!(i1_exact(100, 1).unwrap(), -0.99, max_relative = 1e-14);
        assert!((i1_exact(1_000_000, 2).unwrap() - (-1.0 - EULER_GAMMA)).abs() < 1e-4);
        assert_relative_eq!(i1_limit(2).unwrap(), -1.0 - EULER_GAMMA, max_relative = 1e-15);
        assert_relative_eq!(i1_limit(3).unwrap(), -(2f64.ln()) - 2.0 * EULER_GAMMA, max_relative = 1e-14);
        assert_eq!(i1_limit(1).unwrap(), -1.0);
    }

    #[test]
    fn i1_approaches_limit() {
        for k in 2..=5 {
            let gap = |n| (i1_exact(n, k).unwrap() - i1_limit(k).unwrap()).abs();
            assert!(gap(1_000_000) < 1e-4);
            assert!(gap(10_000) < gap(100));
        }
    }

    #[test]
    fn sup_gap_of_identical_densities_is_zero() {
        let law = KExtremeLaw::new(crate::laws::LimitLaw::Gumbel, 2).unwrap();
        let grid = default_sup_grid(&law, 50);
        let gap = sup_gap(&grid, |x| law.ln_pdf(x).exp(), |x| law.ln_pdf(x).exp()).unwrap();
        assert_eq!(gap, 0.0);
        assert!(sup_gap(&[], |x| x, |x| x).is_err());
    }

    #[test]
    fn sup_gap_shrinks_with_n() {
        let law = KExtremeLaw::new(crate::laws::LimitLaw::Frechet { alpha: 2.0 }, 2).unwrap();
        let grid: Vec<f64> = (0..=100).map(|i| 0.3 + 4.7 * i as f64 / 100.0).collect();
        let gap = |n| sup_density_gap(&model("pareto:alpha=2", n, 2), &law, &grid).unwrap();
        assert!(gap(10_000) < gap(100));
        assert!(gap(100_000) < 0.01);
    }

    #[test]
    fn report_assembles_in_order() {
        let p = ParentDistribution::parse("exp").unwrap();
        let r = convergence_report(&p, 2, &[100, 1000], None, 1e-9).unwrap();
        assert_eq!(r.schedule(), vec![100, 1000]);
        assert!(r.all_ok());
        assert_relative_eq!(r.target, 2.0 * EULER_GAMMA, max_relative = 1e-14);
        assert!(convergence_report(&p, 2, &[1000, 100], None, 1e-9).is_err());
        assert!(convergence_report(&p, 2, &[], None, 1e-9).is_err());
    }
}
