//! Adaptive Gauss–Kronrod (7/15) integration on finite and infinite intervals.
//!
//! Each interval is mapped onto `t ∈ (0, 1)` before subdivision:
//!
//! * finite `[a, b]`: `x = a + (b - a) t`
//! * `[a, ∞)`: `x = a + t/(1 - t)`, and `(-∞, b]`: `x = b - t/(1 - t)`
//! * `(-∞, ∞)` is split at 0 into the two half-lines above.
//!
//! Integrands with algebraic tails (`x^{-p}` with small `p`) become singular
//! at `t = 1` under the rational map, so [`TailMap::Stretched`] offers a
//! second documented map for half-lines, `x = a + expm1(t/(1 - t))`, which
//! turns algebraic decay into exponential decay.
//!
//! The subdivision always bisects the interval with the largest error
//! estimate and sums the final partition in a fixed order, so results are
//! deterministic for a given integrand.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Maximum number of subintervals before giving up.
pub const MAX_INTERVALS: usize = 10_000;

/// `p ln p` is taken as 0 below this density.
pub const DENSITY_FLOOR: f64 = 1e-300;

#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureResult {
    pub value: f64,
    pub error_bound: f64,
    pub evaluations: usize,
    pub intervals: usize,
    pub converged: bool,
    /// Subinterval (in the original variable) carrying the largest error.
    pub worst_interval: (f64, f64),
}

impl QuadratureResult {
    /// Turn a non-converged result into [`Error::Quadrature`].
    pub fn require_converged(self, tol: f64) -> Result<Self> {
        if self.converged {
            Ok(self)
        } else if !self.value.is_finite() {
            Err(Error::numeric(format!(
                "integrand produced non-finite values near [{:e}, {:e}]",
                self.worst_interval.0, self.worst_interval.1
            )))
        } else {
            Err(Error::Quadrature(self, tol))
        }
    }
}

/// How infinite endpoints are mapped onto the unit interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TailMap {
    /// `x = a ± t/(1 - t)`.
    Rational,
    /// `x = a ± expm1(t/(1 - t))`, for algebraically decaying tails.
    Stretched,
}

#[derive(Debug, Clone, Copy)]
enum Map {
    Finite { a: f64, b: f64 },
    Upper { a: f64, stretched: bool },
    Lower { b: f64, stretched: bool },
}

impl Map {
    fn new(a: f64, b: f64, tails: TailMap) -> Vec<Map> {
        let stretched = tails == TailMap::Stretched;
        match (a.is_finite(), b.is_finite()) {
            (true, true) => vec![Map::Finite { a, b }],
            (true, false) => vec![Map::Upper { a, stretched }],
            (false, true) => vec![Map::Lower { b, stretched }],
            (false, false) => vec![Map::Lower { b: 0.0, stretched }, Map::Upper { a: 0.0, stretched }],
        }
    }

    /// Returns `(x, dx/dt)`.
    #[inline]
    fn eval(&self, t: f64) -> (f64, f64) {
        match *self {
            Map::Finite { a, b } => (a + (b - a) * t, b - a),
            Map::Upper { a, stretched } => {
                let u = 1.0 - t;
                let s = t / u;
                if stretched {
                    (a + s.exp_m1(), s.exp() / (u * u))
                } else {
                    (a + s, 1.0 / (u * u))
                }
            }
            Map::Lower { b, stretched } => {
                let u = 1.0 - t;
                let s = t / u;
                if stretched {
                    (b - s.exp_m1(), s.exp() / (u * u))
                } else {
                    (b - s, 1.0 / (u * u))
                }
            }
        }
    }

    fn x_at(&self, t: f64) -> f64 {
        match *self {
            Map::Finite { .. } => self.eval(t).0,
            _ if t >= 1.0 => match self {
                Map::Upper { .. } => f64::INFINITY,
                _ => f64::NEG_INFINITY,
            },
            _ => self.eval(t).0,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    piece: usize,
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.piece.cmp(&self.piece))
            .then_with(|| other.lo.total_cmp(&self.lo))
    }
}

// indices follow the QUADPACK node layout
#[allow(clippy::needless_range_loop)]
fn gauss_kronrod<G: Fn(f64) -> f64>(g: &G, lo: f64, hi: f64) -> (f64, f64) {
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let fc = g(center);
    let mut res_g = fc * WG[3];
    let mut res_k = fc * WGK[7];
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..3 {
        let jtw = 2 * j + 1;
        let absc = half * XGK[jtw];
        let f1 = g(center - absc);
        let f2 = g(center + absc);
        fv1[jtw] = f1;
        fv2[jtw] = f2;
        res_g += WG[j] * (f1 + f2);
        res_k += WGK[jtw] * (f1 + f2);
        res_abs += WGK[jtw] * (f1.abs() + f2.abs());
    }
    for j in 0..4 {
        let jtwm1 = 2 * j;
        let absc = half * XGK[jtwm1];
        let f1 = g(center - absc);
        let f2 = g(center + absc);
        fv1[jtwm1] = f1;
        fv2[jtwm1] = f2;
        res_k += WGK[jtwm1] * (f1 + f2);
        res_abs += WGK[jtwm1] * (f1.abs() + f2.abs());
    }
    let res_kh = 0.5 * res_k;
    let mut res_asc = WGK[7] * (fc - res_kh).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv1[j] - res_kh).abs() + (fv2[j] - res_kh).abs());
    }
    let value = res_k * half;
    res_abs *= half.abs();
    res_asc *= half.abs();
    let mut err = ((res_k - res_g) * half).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    (value, err)
}

fn neumaier_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0_f64;
    let mut comp = 0.0_f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

fn adaptive<F: Fn(f64) -> f64>(f: &F, maps: &[Map], tol: f64) -> QuadratureResult {
    let evaluations = std::cell::Cell::new(0usize);
    let eval_piece = |piece: usize, lo: f64, hi: f64| -> Segment {
        let map = maps[piece];
        let g = |t: f64| -> f64 {
            evaluations.set(evaluations.get() + 1);
            let (x, jac) = map.eval(t);
            if !x.is_finite() {
                return 0.0;
            }
            let fx = f(x);
            if fx == 0.0 {
                0.0
            } else {
                fx * jac
            }
        };
        let (value, error) = gauss_kronrod(&g, lo, hi);
        Segment { piece, lo, hi, value, error }
    };

    let mut heap = BinaryHeap::new();
    let mut frozen: Vec<Segment> = Vec::new();
    let mut total_err = 0.0;
    for piece in 0..maps.len() {
        let seg = eval_piece(piece, 0.0, 1.0);
        total_err += seg.error;
        heap.push(seg);
    }

    let mut count = maps.len();
    let mut non_finite = false;
    while total_err > tol && count < MAX_INTERVALS {
        let Some(worst) = heap.pop() else { break };
        if !worst.value.is_finite() || !worst.error.is_finite() {
            non_finite = true;
            heap.push(worst);
            break;
        }
        let mid = 0.5 * (worst.lo + worst.hi);
        if !(mid > worst.lo && mid < worst.hi)
            || worst.hi - worst.lo <= 8.0 * f64::EPSILON * worst.hi.abs().max(worst.lo.abs())
        {
            frozen.push(worst);
            continue;
        }
        let left = eval_piece(worst.piece, worst.lo, mid);
        let right = eval_piece(worst.piece, mid, worst.hi);
        total_err += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        count += 1;
        // keep the running sum honest when errors span many magnitudes
        if count.is_multiple_of(256) {
            total_err = heap.iter().chain(frozen.iter()).map(|s| s.error).sum();
        }
    }

    let mut segments: Vec<Segment> = heap.into_vec();
    segments.extend(frozen);
    segments.sort_by(|a, b| a.piece.cmp(&b.piece).then(a.lo.total_cmp(&b.lo)));
    let value = neumaier_sum(segments.iter().map(|s| s.value));
    let error_bound = neumaier_sum(segments.iter().map(|s| s.error));
    let worst =
        segments.iter().max_by(|a, b| a.error.total_cmp(&b.error)).copied().expect("at least one segment");
    let map = maps[worst.piece];
    let worst_interval = {
        let (x0, x1) = (map.x_at(worst.lo), map.x_at(worst.hi));
        (x0.min(x1), x0.max(x1))
    };
    let finite = value.is_finite() && error_bound.is_finite() && !non_finite;
    QuadratureResult {
        value: if finite { value } else { f64::NAN },
        error_bound: if finite { error_bound } else { f64::INFINITY },
        evaluations: evaluations.get(),
        intervals: segments.len(),
        converged: finite && error_bound <= tol,
        worst_interval,
    }
}

fn check_args(a: f64, b: f64, tol: f64) -> Result<()> {
    if a.is_nan() || b.is_nan() || !(a < b) {
        return Err(Error::domain(format!("integration bounds must satisfy a < b, got [{a}, {b}]")));
    }
    if !(tol > 0.0) {
        return Err(Error::domain(format!("tolerance must be positive, got {tol}")));
    }
    Ok(())
}

/// Integrate `f` over `[a, b]` (either end may be infinite) to absolute
/// tolerance `tol`, using the rational map for infinite ends.
///
/// Hitting the subdivision cap is not an error: the result comes back with
/// `converged == false` and the best estimate.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<QuadratureResult> {
    check_args(a, b, tol)?;
    Ok(adaptive(&f, &Map::new(a, b, TailMap::Rational), tol))
}

/// Like [`integrate`] but with the choice of tail map made explicit.
pub fn integrate_with<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    tol: f64,
    tails: TailMap,
) -> Result<QuadratureResult> {
    check_args(a, b, tol)?;
    Ok(adaptive(&f, &Map::new(a, b, tails), tol))
}

/// Integrate over consecutive pieces `[p0, p1], [p1, p2], ...` in one shared
/// adaptive pass. The outer points may be infinite.
pub fn integrate_breakpoints<F: Fn(f64) -> f64>(
    f: F,
    points: &[f64],
    tol: f64,
    tails: TailMap,
) -> Result<QuadratureResult> {
    if points.len() < 2 {
        return Err(Error::domain("need at least two breakpoints"));
    }
    let mut maps = Vec::with_capacity(points.len());
    for w in points.windows(2) {
        check_args(w[0], w[1], tol)?;
        maps.extend(Map::new(w[0], w[1], tails));
    }
    Ok(adaptive(&f, &maps, tol))
}

/// `∫ weight(x) pdf(x) dx` over `[a, b]`; points where the density vanishes
/// contribute nothing even if the weight is unbounded there.
pub fn expectation<P, W>(pdf: P, weight: W, a: f64, b: f64, tol: f64) -> Result<QuadratureResult>
where
    P: Fn(f64) -> f64,
    W: Fn(f64) -> f64,
{
    integrate(
        |x| {
            let p = pdf(x);
            if p == 0.0 {
                0.0
            } else {
                weight(x) * p
            }
        },
        a,
        b,
        tol,
    )
}

/// `-p ln p` from `ln p`, with the exact limit 0 for `p < 1e-300`.
#[inline]
pub fn neg_p_ln_p(ln_p: f64) -> f64 {
    if ln_p.is_nan() {
        return f64::NAN;
    }
    if ln_p < DENSITY_FLOOR.ln() {
        0.0
    } else {
        -ln_p.exp() * ln_p
    }
}
