//! Parent distributions, their max domains of attraction, and norming constants.
//!
//! A parent is addressed by a spec string `name[:param=value,...]`:
//!
//! | spec                     | F(x)                         | domain        |
//! |--------------------------|------------------------------|---------------|
//! | `pareto:alpha=a`         | `1 - x^{-a}`, `x >= 1`       | Fréchet(a)    |
//! | `uniform`                | `x` on `[0, 1]`              | Weibull(1)    |
//! | `beta-power:beta=b`      | `1 - (1-x)^b` on `[0, 1]`    | Weibull(b)    |
//! | `exponential[:rate=r]`   | `1 - e^{-r x}`, `x >= 0`     | Gumbel        |
//! | `logistic`               | `1/(1 + e^{-x})`             | Gumbel        |
//!
//! `exp` is accepted as a short name for `exponential`, `power` for `beta-power`.
//!
//! Domain classification is a numeric check of the von Mises ratios on a
//! finite grid of points approaching the right endpoint. It is a heuristic:
//! agreement on a grid is evidence of domain membership, not a proof.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::laws::LimitLaw;
use crate::quadrature::{self, TailMap};

/// A continuous parent distribution. Only `spec`, `support`, `pdf` and `cdf`
/// are required; the log-space and inverse functions have generic fallbacks,
/// and catalogue members override them with analytic forms.
pub trait ContinuousParent: fmt::Debug + Send + Sync {
    /// Canonical spec string, e.g. `pareto:alpha=2`.
    fn spec(&self) -> String;

    /// `(l(F), r(F))`, possibly infinite.
    fn support(&self) -> (f64, f64);

    fn pdf(&self, x: f64) -> f64;

    fn cdf(&self, x: f64) -> f64;

    fn sf(&self, x: f64) -> f64 {
        1.0 - self.cdf(x)
    }

    fn ln_pdf(&self, x: f64) -> f64 {
        self.pdf(x).ln()
    }

    fn ln_cdf(&self, x: f64) -> f64 {
        let s = self.sf(x);
        if s < 0.5 {
            (-s).ln_1p()
        } else {
            self.cdf(x).ln()
        }
    }

    fn ln_sf(&self, x: f64) -> f64 {
        let c = self.cdf(x);
        if c < 0.5 {
            (-c).ln_1p()
        } else {
            self.sf(x).ln()
        }
    }

    /// Analytic quantile, if known.
    fn quantile(&self, _p: f64) -> Option<f64> {
        None
    }

    /// Analytic inverse survival function `x` with `1 - F(x) = q`, if known.
    fn inverse_sf(&self, _q: f64) -> Option<f64> {
        None
    }

    /// Domain of attraction known in closed form.
    fn analytic_domain(&self) -> Option<DomainTag> {
        None
    }

    /// Auxiliary function `u(t)` in closed form, for Gumbel-domain parents.
    fn analytic_auxiliary(&self, _t: f64) -> Option<f64> {
        None
    }
}

/// Max domain of attraction of a parent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "domain", rename_all = "lowercase")]
pub enum DomainTag {
    Frechet { alpha: f64 },
    Weibull { alpha: f64 },
    Gumbel,
    Unknown,
}

impl DomainTag {
    pub fn limit_law(&self) -> Option<LimitLaw> {
        match *self {
            DomainTag::Frechet { alpha } => Some(LimitLaw::Frechet { alpha }),
            DomainTag::Weibull { alpha } => Some(LimitLaw::Weibull { alpha }),
            DomainTag::Gumbel => Some(LimitLaw::Gumbel),
            DomainTag::Unknown => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            DomainTag::Frechet { .. } => "frechet",
            DomainTag::Weibull { .. } => "weibull",
            DomainTag::Gumbel => "gumbel",
            DomainTag::Unknown => "unknown",
        }
    }

    pub fn alpha(&self) -> Option<f64> {
        match *self {
            DomainTag::Frechet { alpha } | DomainTag::Weibull { alpha } => Some(alpha),
            _ => None,
        }
    }

    /// Same family and, where present, shapes equal to relative `tol`.
    pub fn agrees_with(&self, other: &DomainTag, tol: f64) -> bool {
        match (self.alpha(), other.alpha()) {
            (Some(a), Some(b)) => self.name() == other.name() && (a - b).abs() <= tol * b.abs(),
            (None, None) => self.name() == other.name(),
            _ => false,
        }
    }
}

impl fmt::Display for DomainTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.alpha() {
            Some(alpha) => write!(f, "{}(alpha={alpha})", self.name()),
            None => f.write_str(self.name()),
        }
    }
}

/// Scale and shift so that `(M_n - b_n)/a_n` has a non-degenerate limit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormingConstants {
    pub n: u64,
    pub a_n: f64,
    pub b_n: f64,
}

impl NormingConstants {
    pub fn new(n: u64, a_n: f64, b_n: f64) -> Result<Self> {
        if !(a_n > 0.0 && a_n.is_finite()) || !b_n.is_finite() {
            return Err(Error::domain(format!(
                "norming constants need a_n > 0 and finite b_n, got ({a_n}, {b_n})"
            )));
        }
        Ok(NormingConstants { n, a_n, b_n })
    }

    /// `a_n x + b_n`.
    #[inline]
    pub fn denormalize(&self, x: f64) -> f64 {
        self.a_n * x + self.b_n
    }

    #[inline]
    pub fn normalize(&self, y: f64) -> f64 {
        (y - self.b_n) / self.a_n
    }
}

/// Shared handle to a parent distribution.
#[derive(Clone)]
pub struct ParentDistribution(Arc<dyn ContinuousParent>);

impl fmt::Debug for ParentDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl fmt::Display for ParentDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.spec())
    }
}

impl ParentDistribution {
    pub fn new(parent: impl ContinuousParent + 'static) -> Self {
        ParentDistribution(Arc::new(parent))
    }

    /// Parse `name[:param=value,...]`.
    pub fn parse(spec: &str) -> Result<Self> {
        let spec = spec.trim();
        let (name, rest) = match spec.split_once(':') {
            Some((n, r)) => (n.trim(), Some(r)),
            None => (spec, None),
        };
        let mut params = BTreeMap::new();
        if let Some(rest) = rest {
            for item in rest.split(',').filter(|s| !s.trim().is_empty()) {
                let (key, value) = item
                    .split_once('=')
                    .ok_or_else(|| Error::Parse(format!("expected param=value, got '{item}'")))?;
                let value: f64 = value
                    .trim()
                    .parse()
                    .map_err(|_| Error::Parse(format!("parameter '{key}' is not a number: '{value}'")))?;
                params.insert(key.trim().to_ascii_lowercase(), value);
            }
        }
        let mut take = |key: &str, default: Option<f64>| -> Result<f64> {
            match params.remove(key).or(default) {
                Some(v) => Ok(v),
                None => Err(Error::Parse(format!("'{name}' needs parameter '{key}'"))),
            }
        };
        let parent = match name.to_ascii_lowercase().as_str() {
            "pareto" => ParentDistribution::new(Pareto::new(take("alpha", None)?)?),
            "uniform" => ParentDistribution::new(Uniform),
            "beta-power" | "betapower" | "power" => {
                ParentDistribution::new(BetaPower::new(take("beta", None)?)?)
            }
            "exponential" | "exp" => ParentDistribution::new(Exponential::new(take("rate", Some(1.0))?)?),
            "logistic" => ParentDistribution::new(Logistic),
            other => return Err(Error::Parse(format!("unknown parent '{other}'"))),
        };
        if let Some(key) = params.keys().next() {
            return Err(Error::Parse(format!("unexpected parameter '{key}' for '{name}'")));
        }
        Ok(parent)
    }

    pub fn spec(&self) -> String {
        self.0.spec()
    }

    pub fn support(&self) -> (f64, f64) {
        self.0.support()
    }

    pub fn right_endpoint(&self) -> f64 {
        self.0.support().1
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.0.pdf(x)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        self.0.cdf(x)
    }

    pub fn sf(&self, x: f64) -> f64 {
        self.0.sf(x)
    }

    pub fn ln_pdf(&self, x: f64) -> f64 {
        self.0.ln_pdf(x)
    }

    pub fn ln_cdf(&self, x: f64) -> f64 {
        self.0.ln_cdf(x)
    }

    pub fn ln_sf(&self, x: f64) -> f64 {
        self.0.ln_sf(x)
    }

    pub fn analytic_domain(&self) -> Option<DomainTag> {
        self.0.analytic_domain()
    }

    /// Quantile; analytic when the parent provides one, otherwise bracketed
    /// bisection on `F` to the resolution of `f64`.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::domain(format!("quantile level must lie in (0, 1), got {p}")));
        }
        if let Some(x) = self.0.quantile(p) {
            return Ok(x);
        }
        self.invert(|x| self.cdf(x) - p)
    }

    /// `x` with `1 - F(x) = q`; the natural way to reach far into the right tail.
    pub fn inverse_sf(&self, q: f64) -> Result<f64> {
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::domain(format!("survival level must lie in (0, 1), got {q}")));
        }
        if let Some(x) = self.0.inverse_sf(q) {
            return Ok(x);
        }
        let ln_q = q.ln();
        self.invert(|x| ln_q - self.ln_sf(x))
    }

    /// Root of an increasing function `g` on the support.
    fn invert<G: Fn(f64) -> f64>(&self, g: G) -> Result<f64> {
        let (l, r) = self.support();
        let mut lo = if l.is_finite() { l } else { -1.0 };
        let mut hi = if r.is_finite() { r } else { lo.max(0.0) + 1.0 };
        let mut step = 1.0;
        while !l.is_finite() && g(lo) > 0.0 {
            lo -= step;
            step *= 2.0;
            if !lo.is_finite() {
                return Err(Error::numeric("quantile bracket escaped to -inf"));
            }
        }
        step = hi.abs().max(1.0);
        while !r.is_finite() && g(hi) < 0.0 {
            hi += step;
            step *= 2.0;
            if !hi.is_finite() {
                return Err(Error::numeric("quantile bracket escaped to +inf"));
            }
        }
        for _ in 0..2200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let v = g(mid);
            if v.is_nan() {
                return Err(Error::numeric(format!("non-finite value during inversion at {mid}")));
            }
            if v < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(if g(lo).abs() <= g(hi).abs() { lo } else { hi })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pareto {
    alpha: f64,
}

impl Pareto {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::Parse(format!("pareto alpha must be positive, got {alpha}")));
        }
        Ok(Pareto { alpha })
    }
}

impl ContinuousParent for Pareto {
    fn spec(&self) -> String {
        format!("pareto:alpha={}", self.alpha)
    }
    fn support(&self) -> (f64, f64) {
        (1.0, f64::INFINITY)
    }
    fn pdf(&self, x: f64) -> f64 {
        if x < 1.0 {
            0.0
        } else {
            self.alpha * x.powf(-self.alpha - 1.0)
        }
    }
    fn cdf(&self, x: f64) -> f64 {
        if x < 1.0 {
            0.0
        } else {
            -(-self.alpha * x.ln()).exp_m1()
        }
    }
    fn sf(&self, x: f64) -> f64 {
        if x < 1.0 {
            1.0
        } else {
            x.powf(-self.alpha)
        }
    }
    fn ln_pdf(&self, x: f64) -> f64 {
        if x < 1.0 {
            f64::NEG_INFINITY
        } else {
            self.alpha.ln() - (self.alpha + 1.0) * x.ln()
        }
    }
    fn ln_cdf(&self, x: f64) -> f64 {
        if x <= 1.0 {
            f64::NEG_INFINITY
        } else {
            (-x.powf(-self.alpha)).ln_1p()
        }
    }
    fn ln_sf(&self, x: f64) -> f64 {
        if x < 1.0 {
            0.0
        } else {
            -self.alpha * x.ln()
        }
    }
    fn quantile(&self, p: f64) -> Option<f64> {
        Some((-(-p).ln_1p() / self.alpha).exp())
    }
    fn inverse_sf(&self, q: f64) -> Option<f64> {
        Some(q.powf(-1.0 / self.alpha))
    }
    fn analytic_domain(&self) -> Option<DomainTag> {
        Some(DomainTag::Frechet { alpha: self.alpha })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Uniform;

impl ContinuousParent for Uniform {
    fn spec(&self) -> String {
        "uniform".into()
    }
    fn support(&self) -> (f64, f64) {
        (0.0, 1.0)
    }
    fn pdf(&self, x: f64) -> f64 {
        if (0.0..=1.0).contains(&x) {
            1.0
        } else {
            0.0
        }
    }
    fn cdf(&self, x: f64) -> f64 {
        x.clamp(0.0, 1.0)
    }
    fn sf(&self, x: f64) -> f64 {
        (1.0 - x).clamp(0.0, 1.0)
    }
    fn ln_cdf(&self, x: f64) -> f64 {
        self.cdf(x).ln()
    }
    fn ln_sf(&self, x: f64) -> f64 {
        self.sf(x).ln()
    }
    fn quantile(&self, p: f64) -> Option<f64> {
        Some(p)
    }
    fn inverse_sf(&self, q: f64) -> Option<f64> {
        Some(1.0 - q)
    }
    fn analytic_domain(&self) -> Option<DomainTag> {
        Some(DomainTag::Weibull { alpha: 1.0 })
    }
}

/// `F(x) = 1 - (1 - x)^β` on `[0, 1]`; requires `β >= 1` so the density is
/// nonincreasing near the right endpoint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaPower {
    beta: f64,
}

impl BetaPower {
    pub fn new(beta: f64) -> Result<Self> {
        if !(beta >= 1.0 && beta.is_finite()) {
            return Err(Error::Parse(format!(
                "beta-power needs beta >= 1 (nonincreasing density near 1), got {beta}"
            )));
        }
        Ok(BetaPower { beta })
    }
}

impl ContinuousParent for BetaPower {
    fn spec(&self) -> String {
        format!("beta-power:beta={}", self.beta)
    }
    fn support(&self) -> (f64, f64) {
        (0.0, 1.0)
    }
    fn pdf(&self, x: f64) -> f64 {
        if (0.0..=1.0).contains(&x) {
            self.beta * (1.0 - x).powf(self.beta - 1.0)
        } else {
            0.0
        }
    }
    fn cdf(&self, x: f64) -> f64 {
        1.0 - self.sf(x)
    }
    fn sf(&self, x: f64) -> f64 {
        (1.0 - x.clamp(0.0, 1.0)).powf(self.beta)
    }
    fn ln_pdf(&self, x: f64) -> f64 {
        if (0.0..=1.0).contains(&x) {
            self.beta.ln() + (self.beta - 1.0) * (1.0 - x).ln()
        } else {
            f64::NEG_INFINITY
        }
    }
    fn ln_sf(&self, x: f64) -> f64 {
        self.beta * (1.0 - x.clamp(0.0, 1.0)).ln()
    }
    fn ln_cdf(&self, x: f64) -> f64 {
        (-self.sf(x)).ln_1p()
    }
    fn quantile(&self, p: f64) -> Option<f64> {
        Some(-((-p).ln_1p() / self.beta).exp_m1())
    }
    fn inverse_sf(&self, q: f64) -> Option<f64> {
        Some(1.0 - q.powf(1.0 / self.beta))
    }
    fn analytic_domain(&self) -> Option<DomainTag> {
        Some(DomainTag::Weibull { alpha: self.beta })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Exponential {
    rate: f64,
}

impl Exponential {
    pub fn new(rate: f64) -> Result<Self> {
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(Error::Parse(format!("exponential rate must be positive, got {rate}")));
        }
        Ok(Exponential { rate })
    }
}

impl ContinuousParent for Exponential {
    fn spec(&self) -> String {
        format!("exponential:rate={}", self.rate)
    }
    fn support(&self) -> (f64, f64) {
        (0.0, f64::INFINITY)
    }
    fn pdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            0.0
        } else {
            self.rate * (-self.rate * x).exp()
        }
    }
    fn cdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            0.0
        } else {
            -(-self.rate * x).exp_m1()
        }
    }
    fn sf(&self, x: f64) -> f64 {
        if x < 0.0 {
            1.0
        } else {
            (-self.rate * x).exp()
        }
    }
    fn ln_pdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            f64::NEG_INFINITY
        } else {
            self.rate.ln() - self.rate * x
        }
    }
    fn ln_cdf(&self, x: f64) -> f64 {
        let t = self.rate * x;
        if t > std::f64::consts::LN_2 {
            (-(-t).exp()).ln_1p()
        } else {
            (-(-t).exp_m1()).ln()
        }
    }
    fn ln_sf(&self, x: f64) -> f64 {
        -self.rate * x.max(0.0)
    }
    fn quantile(&self, p: f64) -> Option<f64> {
        Some(-(-p).ln_1p() / self.rate)
    }
    fn inverse_sf(&self, q: f64) -> Option<f64> {
        Some(-q.ln() / self.rate)
    }
    fn analytic_domain(&self) -> Option<DomainTag> {
        Some(DomainTag::Gumbel)
    }
    fn analytic_auxiliary(&self, _t: f64) -> Option<f64> {
        Some(1.0 / self.rate)
    }
}

/// Standard logistic; its auxiliary function has no registered closed form
/// and is computed by quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Logistic;

fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

impl ContinuousParent for Logistic {
    fn spec(&self) -> String {
        "logistic".into()
    }
    fn support(&self) -> (f64, f64) {
        (f64::NEG_INFINITY, f64::INFINITY)
    }
    fn pdf(&self, x: f64) -> f64 {
        self.ln_pdf(x).exp()
    }
    fn cdf(&self, x: f64) -> f64 {
        self.ln_cdf(x).exp()
    }
    fn sf(&self, x: f64) -> f64 {
        self.ln_sf(x).exp()
    }
    fn ln_pdf(&self, x: f64) -> f64 {
        -x.abs() - 2.0 * (-x.abs()).exp().ln_1p()
    }
    fn ln_cdf(&self, x: f64) -> f64 {
        -softplus(-x)
    }
    fn ln_sf(&self, x: f64) -> f64 {
        -softplus(x)
    }
    fn quantile(&self, p: f64) -> Option<f64> {
        Some(p.ln() - (-p).ln_1p())
    }
    fn inverse_sf(&self, q: f64) -> Option<f64> {
        Some((-q).ln_1p() - q.ln())
    }
    fn analytic_domain(&self) -> Option<DomainTag> {
        Some(DomainTag::Gumbel)
    }
}

/// Validated, immutable set of parents.
#[derive(Debug, Clone, Default)]
pub struct Catalog {
    entries: Vec<ParentDistribution>,
}

impl Catalog {
    pub fn empty() -> Self {
        Catalog::default()
    }

    /// Pareto(2), Uniform(0,1), Beta-power(2), Exponential(1), Logistic.
    pub fn builtin() -> Self {
        let mut c = Catalog::empty();
        for spec in ["pareto:alpha=2", "uniform", "beta-power:beta=2", "exponential:rate=1", "logistic"] {
            c.register(ParentDistribution::parse(spec).expect("builtin spec"))
                .expect("builtin parent passes validation");
        }
        c
    }

    /// Admit a parent after checking it is a proper continuous law with a
    /// nonincreasing density near its right endpoint.
    pub fn register(&mut self, parent: ParentDistribution) -> Result<()> {
        validate_parent(&parent)?;
        self.entries.push(parent);
        Ok(())
    }

    pub fn get(&self, spec: &str) -> Option<&ParentDistribution> {
        self.entries.iter().find(|p| p.spec() == spec)
    }

    pub fn iter(&self) -> impl Iterator<Item = &ParentDistribution> {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// The built-in parents.
pub fn catalog() -> Vec<ParentDistribution> {
    Catalog::builtin().entries
}

/// Points `x_j = F̄^{-1}(10^{-j})`, `j = 1..=10`, approaching `r(F)`.
pub fn default_probes(parent: &ParentDistribution) -> Result<Vec<f64>> {
    (1..=10).map(|j| parent.inverse_sf(10f64.powi(-j))).collect()
}

fn validate_parent(parent: &ParentDistribution) -> Result<()> {
    let (l, r) = parent.support();
    if !(l < r) {
        return Err(Error::domain(format!("{parent}: empty support [{l}, {r}]")));
    }
    let probes = default_probes(parent)?;
    for w in probes.windows(2) {
        let (x0, x1) = (w[0], w[1]);
        if !(x0 < x1) {
            if x0 == x1 {
                return Err(Error::domain(format!("{parent}: survival function has an atom near {x0}")));
            }
            return Err(Error::domain(format!("{parent}: probes not increasing towards r(F)")));
        }
        let (f0, f1) = (parent.pdf(x0), parent.pdf(x1));
        if !(f0.is_finite() && f1.is_finite() && f0 >= 0.0 && f1 >= 0.0) {
            return Err(Error::domain(format!("{parent}: density not finite and non-negative near {x1}")));
        }
        if f1 > f0 * (1.0 + 1e-12) {
            return Err(Error::domain(format!(
                "{parent}: density increases near the right endpoint ({f0:e} -> {f1:e})"
            )));
        }
        // mass between probes must come from the density: no atoms
        let from_cdf = parent.sf(x0) - parent.sf(x1);
        let from_pdf = quadrature::integrate(|x| parent.pdf(x), x0, x1, 1e-12 * from_cdf.max(1e-300))?.value;
        if (from_cdf - from_pdf).abs() > 1e-6 * from_cdf {
            return Err(Error::domain(format!(
                "{parent}: distribution is not absolutely continuous on [{x0}, {x1}]"
            )));
        }
    }
    for i in 1..20 {
        let p = i as f64 / 20.0;
        let x = parent.quantile(p)?;
        if (parent.cdf(x) - p).abs() > 1e-9 {
            return Err(Error::domain(format!("{parent}: quantile inconsistent with cdf at p={p}")));
        }
    }
    Ok(())
}

const STABLE_REL: f64 = 1e-3;

fn stabilized(ratios: &[f64]) -> bool {
    if ratios.len() < 3 {
        return false;
    }
    let tail = &ratios[ratios.len() - 3..];
    tail.windows(2).all(|w| (w[1] - w[0]).abs() <= STABLE_REL * w[1].abs())
}

/// Classify a parent into a max domain of attraction from the von Mises
/// ratios along `probes`, which must increase strictly towards `r(F)`.
///
/// * infinite `r(F)`: `x f(x) / F̄(x) → α` gives Fréchet(α);
/// * finite `r(F)`: `(r(F) - x) f(x) / F̄(x) → α` gives Weibull(α);
/// * otherwise `f(x) ∫_x^{r(F)} F̄ / F̄(x)² → 1` gives Gumbel.
///
/// A ratio counts as converged when it moves by less than 1e-3 (relative)
/// over the last three probes.
pub fn classify_domain(parent: &ParentDistribution, probes: &[f64]) -> Result<DomainTag> {
    let (l, r) = parent.support();
    if probes.len() < 3 {
        return Err(Error::domain("need at least three probe points"));
    }
    if probes.windows(2).any(|w| !(w[0] < w[1])) || probes.iter().any(|&x| !(x > l && x < r)) {
        return Err(Error::domain("probes must increase strictly inside the support"));
    }
    let hazard = |x: f64| (parent.ln_pdf(x) - parent.ln_sf(x)).exp();

    let power_ratios: Vec<f64> =
        probes.iter().map(|&x| if r.is_finite() { (r - x) * hazard(x) } else { x * hazard(x) }).collect();
    if let Some(bad) = power_ratios.iter().find(|v| !v.is_finite()) {
        return Err(Error::numeric(format!("von Mises ratio evaluated to {bad}")));
    }
    if stabilized(&power_ratios) {
        let alpha = *power_ratios.last().unwrap();
        if alpha > 0.0 {
            return Ok(if r.is_finite() {
                DomainTag::Weibull { alpha }
            } else {
                DomainTag::Frechet { alpha }
            });
        }
    }

    let mut gumbel_ratios = Vec::with_capacity(probes.len());
    for &x in probes {
        match auxiliary_u_numeric(parent, x) {
            Ok(u) => {
                let ratio = hazard(x) * u;
                if !ratio.is_finite() {
                    return Err(Error::numeric(format!("Gumbel ratio evaluated to {ratio} at {x}")));
                }
                gumbel_ratios.push(ratio);
            }
            Err(Error::Quadrature(..)) => return Ok(DomainTag::Unknown),
            Err(e) => return Err(e),
        }
    }
    if stabilized(&gumbel_ratios) && (gumbel_ratios.last().unwrap() - 1.0).abs() <= STABLE_REL {
        return Ok(DomainTag::Gumbel);
    }
    Ok(DomainTag::Unknown)
}

/// [`classify_domain`] on [`default_probes`].
pub fn classify(parent: &ParentDistribution) -> Result<DomainTag> {
    classify_domain(parent, &default_probes(parent)?)
}

/// Auxiliary function `u(t) = ∫_t^{r(F)} F̄(s) ds / F̄(t)`, analytic when the
/// parent registers one.
pub fn auxiliary_u(parent: &ParentDistribution, t: f64) -> Result<f64> {
    check_aux_arg(parent, t)?;
    if let Some(u) = parent.0.analytic_auxiliary(t) {
        return Ok(u);
    }
    auxiliary_u_numeric(parent, t)
}

fn check_aux_arg(parent: &ParentDistribution, t: f64) -> Result<()> {
    if t.is_nan() || !(t < parent.right_endpoint()) || !(parent.sf(t) > 0.0) {
        return Err(Error::domain(format!("auxiliary function needs F̄(t) > 0, got t={t}")));
    }
    Ok(())
}

/// Quadrature route for [`auxiliary_u`], to about 1e-10 relative accuracy.
pub fn auxiliary_u_numeric(parent: &ParentDistribution, t: f64) -> Result<f64> {
    check_aux_arg(parent, t)?;
    let (_, r) = parent.support();
    let ln_sf_t = parent.ln_sf(t);
    let ratio = |s: f64| (parent.ln_sf(s) - ln_sf_t).exp();
    let scale = if r.is_finite() { r - t } else { t.abs().max(1.0) };
    let crude = quadrature::integrate_with(ratio, t, r, 1e-4 * scale, TailMap::Stretched)?;
    let crude = crude.require_converged(1e-4 * scale).map_err(|e| match e {
        Error::Quadrature(res, tol) => Error::Quadrature(res, tol),
        other => Error::numeric(format!("auxiliary integral diverges or is not finite: {other}")),
    })?;
    if !(crude.value > 0.0) {
        return Err(Error::numeric(format!("auxiliary integral is not positive at t={t}")));
    }
    let tol = 1e-11 * crude.value;
    let fine = quadrature::integrate_with(ratio, t, r, tol, TailMap::Stretched)?.require_converged(tol)?;
    Ok(fine.value)
}

/// Norming constants from the standard recipes, with
/// `(1/(1-F))^←(n) = F̄^{-1}(1/n)`:
///
/// * Fréchet: `a_n = F̄^{-1}(1/n)`, `b_n = 0`
/// * Weibull: `a_n = r(F) - F̄^{-1}(1/n)`, `b_n = r(F)`
/// * Gumbel: `b_n = F̄^{-1}(1/n)`, `a_n = u(b_n)`
pub fn norming_constants(parent: &ParentDistribution, tag: DomainTag, n: u64) -> Result<NormingConstants> {
    if n < 2 {
        return Err(Error::domain(format!("norming constants need n >= 2, got {n}")));
    }
    let q = parent.inverse_sf(1.0 / n as f64)?;
    let (a_n, b_n) = match tag {
        DomainTag::Frechet { .. } => (q, 0.0),
        DomainTag::Weibull { .. } => {
            let r = parent.right_endpoint();
            if !r.is_finite() {
                return Err(Error::domain("Weibull norming needs a finite right endpoint"));
            }
            (r - q, r)
        }
        DomainTag::Gumbel => (auxiliary_u(parent, q)?, q),
        DomainTag::Unknown => {
            return Err(Error::Classification(format!("{parent}: cannot norm a parent with unknown domain")))
        }
    };
    NormingConstants::new(n, a_n, b_n)
}

/// `count` points `G^{-1}(p)` with `p` evenly spread over `[0.02, 0.98]`,
/// all inside `{G > 0.01}`.
pub fn limit_grid(law: &LimitLaw, count: usize) -> Vec<f64> {
    (0..count)
        .map(|i| {
            let p = if count == 1 { 0.5 } else { 0.02 + 0.96 * i as f64 / (count - 1) as f64 };
            law.x_from_neg_ln_cdf(-p.ln())
        })
        .collect()
}

/// `max_x |n (1 - F(a_n x + b_n)) - (-ln G(x))|` over `grid`.
pub fn tail_equivalence_gap(
    parent: &ParentDistribution,
    norm: &NormingConstants,
    law: &LimitLaw,
    grid: &[f64],
) -> f64 {
    grid.iter()
        .map(|&x| {
            let nsf = norm.n as f64 * parent.sf(norm.denormalize(x));
            (nsf - law.neg_ln_cdf(x)).abs()
        })
        .fold(0.0, f64::max)
}

/// `max_x |F^n(a_n x + b_n) - G(x)|` over `grid`.
pub fn max_convergence_gap(
    parent: &ParentDistribution,
    norm: &NormingConstants,
    law: &LimitLaw,
    grid: &[f64],
) -> f64 {
    grid.iter()
        .map(|&x| {
            let fn_ = (norm.n as f64 * parent.ln_cdf(norm.denormalize(x))).exp();
            (fn_ - law.cdf(x)).abs()
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn p(spec: &str) -> ParentDistribution {
        ParentDistribution::parse(spec).unwrap()
    }

    #[test]
    fn parse_grammar() {
        assert_eq!(p("pareto:alpha=2").spec(), "pareto:alpha=2");
        assert_eq!(p("exp").spec(), "exponential:rate=1");
        assert_eq!(p("exponential:rate=0.5").spec(), "exponential:rate=0.5");
        assert_eq!(p(" power : beta = 3 ").spec(), "beta-power:beta=3");
        assert!(matches!(ParentDistribution::parse("cauchy"), Err(Error::Parse(_))));
        assert!(matches!(ParentDistribution::parse("pareto"), Err(Error::Parse(_))));
        assert!(matches!(ParentDistribution::parse("pareto:alpha=x"), Err(Error::Parse(_))));
        assert!(matches!(ParentDistribution::parse("uniform:a=1"), Err(Error::Parse(_))));
        assert!(matches!(ParentDistribution::parse("pareto:alpha=-1"), Err(Error::Parse(_))));
        assert!(matches!(ParentDistribution::parse("beta-power:beta=0.5"), Err(Error::Parse(_))));
    }

    #[test]
    fn catalog_contents() {
        let cat = Catalog::builtin();
        assert_eq!(cat.len(), 5);
        let tag = |s: &str| cat.get(s).unwrap().analytic_domain().unwrap();
        assert_eq!(tag("pareto:alpha=2"), DomainTag::Frechet { alpha: 2.0 });
        assert_eq!(tag("uniform"), DomainTag::Weibull { alpha: 1.0 });
        assert_eq!(tag("exponential:rate=1"), DomainTag::Gumbel);
    }

    #[test]
    fn registration_rejects_increasing_density_near_endpoint() {
        #[derive(Debug)]
        struct Rising; // F(x) = x^2 on [0, 1]
        impl ContinuousParent for Rising {
            fn spec(&self) -> String {
                "rising".into()
            }
            fn support(&self) -> (f64, f64) {
                (0.0, 1.0)
            }
            fn pdf(&self, x: f64) -> f64 {
                if (0.0..=1.0).contains(&x) {
                    2.0 * x
                } else {
                    0.0
                }
            }
            fn cdf(&self, x: f64) -> f64 {
                x.clamp(0.0, 1.0).powi(2)
            }
        }
        let mut cat = Catalog::empty();
        assert!(cat.register(ParentDistribution::new(Rising)).is_err());
    }

    #[test]
    fn registration_rejects_atoms() {
        #[derive(Debug)]
        struct Mixed; // exponential with half its mass moved to an atom at 5
        impl ContinuousParent for Mixed {
            fn spec(&self) -> String {
                "mixed".into()
            }
            fn support(&self) -> (f64, f64) {
                (0.0, f64::INFINITY)
            }
            fn pdf(&self, x: f64) -> f64 {
                if x < 0.0 {
                    0.0
                } else {
                    0.5 * (-x).exp()
                }
            }
            fn cdf(&self, x: f64) -> f64 {
                if x < 0.0 {
                    0.0
                } else {
                    0.5 * (1.0 - (-x).exp()) + if x >= 5.0 { 0.5 } else { 0.0 }
                }
            }
        }
        let mut cat = Catalog::empty();
        assert!(cat.register(ParentDistribution::new(Mixed)).is_err());
    }

    #[test]
    fn bracketed_inversion_for_user_parents() {
        #[derive(Debug)]
        struct PlainExp;
        impl ContinuousParent for PlainExp {
            fn spec(&self) -> String {
                "plain-exp".into()
            }
            fn support(&self) -> (f64, f64) {
                (0.0, f64::INFINITY)
            }
            fn pdf(&self, x: f64) -> f64 {
                if x < 0.0 {
                    0.0
                } else {
                    (-x).exp()
                }
            }
            fn cdf(&self, x: f64) -> f64 {
                if x < 0.0 {
                    0.0
                } else {
                    -(-x).exp_m1()
                }
            }
            fn ln_sf(&self, x: f64) -> f64 {
                -x.max(0.0)
            }
        }
        let d = ParentDistribution::new(PlainExp);
        for q in [0.5, 1e-3, 1e-9] {
            assert_relative_eq!(d.inverse_sf(q).unwrap(), -q.ln(), max_relative = 1e-12);
            assert!((d.cdf(d.quantile(q).unwrap()) - q).abs() < 1e-12);
        }
        let mut cat = Catalog::empty();
        cat.register(d.clone()).unwrap();
        assert_eq!(classify(&d).unwrap(), DomainTag::Gumbel);
        let norm = norming_constants(&d, DomainTag::Gumbel, 100).unwrap();
        assert_relative_eq!(norm.a_n, 1.0, max_relative = 1e-8);
        assert_relative_eq!(norm.b_n, 100f64.ln(), max_relative = 1e-12);
    }

    #[test]
    fn quantile_roundtrip_on_catalog() {
        for d in catalog() {
            for i in 1..50 {
                let q = d.quantile(i as f64 / 50.0).unwrap();
                let x = q;
                let back = d.quantile(d.cdf(x)).unwrap();
                assert!((back - x).abs() <= 1e-9 * x.abs().max(1.0), "{d} x={x}");
            }
        }
    }

    #[test]
    fn classify_examples() {
        let tag = classify(&p("pareto:alpha=2")).unwrap();
        assert!(tag.agrees_with(&DomainTag::Frechet { alpha: 2.0 }, 1e-12));
        let tag = classify(&p("uniform")).unwrap();
        assert!(tag.agrees_with(&DomainTag::Weibull { alpha: 1.0 }, 1e-12));
        assert_eq!(classify(&p("exp")).unwrap(), DomainTag::Gumbel);
        assert_eq!(classify(&p("logistic")).unwrap(), DomainTag::Gumbel);
        let tag = classify(&p("beta-power:beta=3")).unwrap();
        assert!(tag.agrees_with(&DomainTag::Weibull { alpha: 3.0 }, 1e-9));
    }

    #[test]
    fn classify_agrees_with_catalog() {
        for d in catalog() {
            let tag = classify(&d).unwrap();
            assert!(tag.agrees_with(&d.analytic_domain().unwrap(), 1e-3), "{d}: {tag}");
        }
    }

    #[test]
    fn classify_rejects_bad_probes() {
        let d = p("exp");
        assert!(classify_domain(&d, &[3.0, 2.0, 4.0]).is_err());
        assert!(classify_domain(&d, &[1.0, 2.0]).is_err());
        assert!(classify_domain(&p("uniform"), &[0.5, 0.9, 1.5]).is_err());
    }

    #[test]
    fn norming_examples() {
        let c = norming_constants(&p("pareto:alpha=2"), DomainTag::Frechet { alpha: 2.0 }, 100).unwrap();
        assert_relative_eq!(c.a_n, 10.0, max_relative = 1e-14);
        assert_eq!(c.b_n, 0.0);
        let c = norming_constants(&p("uniform"), DomainTag::Weibull { alpha: 1.0 }, 50).unwrap();
        assert_relative_eq!(c.a_n, 0.02, max_relative = 1e-12);
        assert_eq!(c.b_n, 1.0);
        let c = norming_constants(&p("exp"), DomainTag::Gumbel, 100).unwrap();
        assert_eq!(c.a_n, 1.0);
        assert_relative_eq!(c.b_n, 4.605_170_185_988_091, max_relative = 1e-14);
        assert!(norming_constants(&p("exp"), DomainTag::Gumbel, 1).is_err());
        assert!(norming_constants(&p("exp"), DomainTag::Unknown, 10).is_err());
    }

    #[test]
    fn auxiliary_examples() {
        for t in [0.0, 1.0, 7.5] {
            assert_eq!(auxiliary_u(&p("exp"), t).unwrap(), 1.0);
            assert_relative_eq!(auxiliary_u_numeric(&p("exp"), t).unwrap(), 1.0, max_relative = 1e-8);
        }
        assert_relative_eq!(auxiliary_u(&p("uniform"), 0.5).unwrap(), 0.25, max_relative = 1e-8);
        assert_relative_eq!(auxiliary_u(&p("pareto:alpha=2"), 10.0).unwrap(), 10.0, max_relative = 1e-8);
        assert!(auxiliary_u(&p("uniform"), 1.0).is_err());
        assert!(auxiliary_u(&p("pareto:alpha=0.8"), 10.0).is_err());
    }

    #[test]
    fn logistic_auxiliary_matches_closed_integral() {
        // ∫_t^∞ F̄ = ln(1 + e^{-t}), F̄(t) = 1/(1 + e^t)
        let d = p("logistic");
        for t in [-3.0f64, 0.0, 2.0, 15.0] {
            let want = (-t).exp().ln_1p() * (1.0 + t.exp());
            assert_relative_eq!(auxiliary_u(&d, t).unwrap(), want, max_relative = 1e-8);
        }
    }

    #[test]
    fn tail_checks_small_n_are_coarse_large_n_tight() {
        for d in catalog() {
            let tag = d.analytic_domain().unwrap();
            let law = tag.limit_law().unwrap();
            let grid = limit_grid(&law, 20);
            let small = norming_constants(&d, tag, 10).unwrap();
            let large = norming_constants(&d, tag, 100_000).unwrap();
            let gap_small = max_convergence_gap(&d, &small, &law, &grid);
            let gap_large = max_convergence_gap(&d, &large, &law, &grid);
            assert!(gap_large <= gap_small + 1e-12, "{d}");
            assert!(tail_equivalence_gap(&d, &large, &law, &grid) < 0.05, "{d}");
        }
    }
}
