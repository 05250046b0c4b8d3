//! Monte Carlo simulation of normalized k-th extremes and the Vasicek
//! m-spacing entropy estimator.
//!
//! Random numbers come from ChaCha20 (`rand_chacha::ChaCha20Rng`), seeded
//! with `seed_from_u64(seed)` and positioned on stream `stream`. The same
//! `(seed, stream)` pair gives the same draws on every platform.
//!
//! The k-th largest of `n` draws is `F̄^{-1}(W)` with `W = 1 - U_{(n-k+1)}`
//! distributed Beta(k, n-k+1). `W` is built as `Gb / (Ga + Gb)` from
//! independent Gamma(k) and Gamma(n-k+1) draws, so the cost per sample does
//! not depend on `n`.

use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Gamma, Open01};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::{EntropyEstimate, EntropyMethod};
use crate::finite::FiniteModel;
use crate::format_float;
use crate::laws::KExtremeLaw;
use crate::parent::{NormingConstants, ParentDistribution};

/// Samples drawn per substream by the parallel sampler.
pub const CHUNK_SIZE: usize = 1 << 14;

/// Minimum batch size accepted by [`mc_convergence`].
pub const MIN_MC_COUNT: usize = 10_000;

/// Two-sided 0.995 quantile of Student's t with 9 degrees of freedom, for
/// 99% intervals from ten sub-batches.
const T_995_9: f64 = 3.249_835_541_592_126;

const SUB_BATCHES: usize = 10;

/// A reproducible random stream: generator seed plus stream id.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RandomStream {
    pub seed: u64,
    pub stream: u64,
}

impl RandomStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        RandomStream { seed, stream }
    }

    pub fn rng(&self) -> ChaCha20Rng {
        let mut rng = ChaCha20Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }

    /// Stream for worker `index`, disjoint from the parent stream and from
    /// other workers' streams.
    pub fn substream(&self, index: u64) -> RandomStream {
        RandomStream { seed: self.seed, stream: self.stream ^ ((index + 1) << 32) }
    }
}

/// Normalized k-th extremes `(X_{n-k+1:n} - b_n)/a_n` with their provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleBatch {
    pub values: Vec<f64>,
    pub parent: String,
    pub n: u64,
    pub k: u64,
    pub norm: NormingConstants,
    pub rng: RandomStream,
    pub normalized: bool,
}

impl SampleBatch {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Single-column CSV preceded by a `#` comment line with the provenance.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(
            out,
            "# parent={}, n={}, k={}, a_n={}, b_n={}, seed={}, stream={}",
            self.parent,
            self.n,
            self.k,
            format_float(self.norm.a_n),
            format_float(self.norm.b_n),
            self.rng.seed,
            self.rng.stream
        )?;
        writeln!(out, "x")?;
        for &v in &self.values {
            writeln!(out, "{}", format_float(v))?;
        }
        Ok(())
    }
}

fn draw_kth_extreme<R: Rng>(
    model: &FiniteModel,
    ga: &Gamma<f64>,
    gb: &Gamma<f64>,
    rng: &mut R,
) -> Result<f64> {
    loop {
        let a = ga.sample(rng);
        let b = gb.sample(rng);
        let w = b / (a + b);
        if w > 0.0 && w < 1.0 {
            let y = model.parent().inverse_sf(w)?;
            return Ok(model.norm().normalize(y));
        }
    }
}

fn gammas(model: &FiniteModel) -> Result<(Gamma<f64>, Gamma<f64>)> {
    let ga = Gamma::new((model.n() - model.k() + 1) as f64, 1.0)
        .map_err(|e| Error::numeric(format!("gamma shape: {e}")))?;
    let gb = Gamma::new(model.k() as f64, 1.0).map_err(|e| Error::numeric(format!("gamma shape: {e}")))?;
    Ok((ga, gb))
}

fn batch(model: &FiniteModel, values: Vec<f64>, rng: RandomStream) -> SampleBatch {
    SampleBatch {
        values,
        parent: model.parent().spec(),
        n: model.n(),
        k: model.k(),
        norm: *model.norm(),
        rng,
        normalized: true,
    }
}

/// Draw `count` normalized k-th extremes from a single stream.
pub fn sample_kth_extreme(model: &FiniteModel, count: usize, rng: &RandomStream) -> Result<SampleBatch> {
    if count < 1 {
        return Err(Error::domain("sample count must be at least 1"));
    }
    let (ga, gb) = gammas(model)?;
    let mut gen = rng.rng();
    let values =
        (0..count).map(|_| draw_kth_extreme(model, &ga, &gb, &mut gen)).collect::<Result<Vec<_>>>()?;
    Ok(batch(model, values, *rng))
}

/// Like [`sample_kth_extreme`] but split into chunks of [`CHUNK_SIZE`] drawn
/// on [`RandomStream::substream`]s in parallel and concatenated in substream
/// order. Output does not depend on the number of threads.
pub fn sample_kth_extreme_par(model: &FiniteModel, count: usize, rng: &RandomStream) -> Result<SampleBatch> {
    if count < 1 {
        return Err(Error::domain("sample count must be at least 1"));
    }
    let (ga, gb) = gammas(model)?;
    let chunks = count.div_ceil(CHUNK_SIZE);
    let parts = (0..chunks)
        .into_par_iter()
        .map(|j| {
            let len = CHUNK_SIZE.min(count - j * CHUNK_SIZE);
            let mut gen = rng.substream(j as u64).rng();
            (0..len).map(|_| draw_kth_extreme(model, &ga, &gb, &mut gen)).collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(batch(model, parts.concat(), *rng))
}

/// Direct draws from the parent by inversion.
pub fn sample_parent(parent: &ParentDistribution, count: usize, rng: &RandomStream) -> Result<Vec<f64>> {
    let mut gen = rng.rng();
    (0..count)
        .map(|_| {
            let u: f64 = Open01.sample(&mut gen);
            parent.inverse_sf(u)
        })
        .collect()
}

/// Default window `⌊√N⌋`.
pub fn default_window(len: usize) -> usize {
    ((len as f64).sqrt().floor() as usize).max(1)
}

fn vasicek_sorted(sorted: &[f64], m: usize) -> f64 {
    let n = sorted.len();
    let scale = n as f64 / (2 * m) as f64;
    let mut sum = 0.0_f64;
    let mut comp = 0.0_f64;
    for i in 0..n {
        let hi = sorted[(i + m).min(n - 1)];
        let lo = sorted[i.saturating_sub(m)];
        let term = (scale * (hi - lo)).ln();
        let t = sum + term;
        comp += if sum.abs() >= term.abs() { (sum - t) + term } else { (term - t) + sum };
        sum = t;
    }
    (sum + comp) / n as f64
}

fn sorted_checked(values: &[f64], m: usize) -> Result<Vec<f64>> {
    if m < 1 {
        return Err(Error::domain("spacing window must be at least 1"));
    }
    if values.len() < 2 * m + 2 {
        return Err(Error::domain(format!(
            "spacing estimator needs at least 2m+2 = {} values, got {}",
            2 * m + 2,
            values.len()
        )));
    }
    if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::Estimator(format!("sample contains non-finite value {bad}")));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let zero_spacing = (0..n).any(|i| sorted[(i + m).min(n - 1)] == sorted[i.saturating_sub(m)]);
    if zero_spacing {
        let ties = sorted.windows(2).filter(|w| w[0] == w[1]).count();
        return Err(Error::Estimator(format!("{ties} tied values produce zero spacings (window m={m})")));
    }
    Ok(sorted)
}

/// Vasicek m-spacing estimate of the entropy of the density behind `values`,
///
/// ```text
/// (1/N) Σ_i ln(N (X_(i+m) - X_(i-m)) / (2m)),
/// ```
///
/// with indices clamped to `[1, N]`. The 99% interval comes from ten
/// contiguous sub-batches (in sample order) estimated with window
/// `⌊√(N/10)⌋`: it is centred on the full estimate with half-width
/// `t_{0.995,9} · sd / √10`.
pub fn spacing_entropy(values: &[f64], m: usize) -> Result<EntropyEstimate> {
    let sorted = sorted_checked(values, m)?;
    let value = vasicek_sorted(&sorted, m);

    let sub_len = values.len() / SUB_BATCHES;
    let sub_m = default_window(sub_len);
    let ci = if sub_len >= 2 * sub_m + 2 {
        let subs = values
            .chunks(sub_len)
            .take(SUB_BATCHES)
            .map(|chunk| sorted_checked(chunk, sub_m).map(|s| vasicek_sorted(&s, sub_m)))
            .collect::<Result<Vec<_>>>()?;
        let mean = subs.iter().sum::<f64>() / SUB_BATCHES as f64;
        let var = subs.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (SUB_BATCHES - 1) as f64;
        let half = T_995_9 * var.sqrt() / (SUB_BATCHES as f64).sqrt();
        Some((value - half, value + half))
    } else {
        None
    };
    let error_bound = ci.map_or(f64::NAN, |(lo, hi)| 0.5 * (hi - lo));
    Ok(EntropyEstimate { value, method: EntropyMethod::SpacingMc, error_bound, ci })
}

/// [`spacing_entropy`] with the default window `⌊√N⌋`.
pub fn spacing_entropy_default(values: &[f64]) -> Result<EntropyEstimate> {
    spacing_entropy(values, default_window(values.len()))
}

/// Kolmogorov–Smirnov distance between the empirical df of `values` and `cdf`.
pub fn ks_distance<F: Fn(f64) -> f64>(values: &[f64], cdf: F) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            ((i + 1) as f64 / n - f).max(f - i as f64 / n)
        })
        .fold(0.0, f64::max)
}

/// Two-sample Kolmogorov–Smirnov distance.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Simulated entropy of the normalized k-th extreme against the limit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McReport {
    pub parent: String,
    pub n: u64,
    pub k: u64,
    pub count: usize,
    pub window: usize,
    pub rng: RandomStream,
    pub norm: NormingConstants,
    pub law: KExtremeLaw,
    pub estimate: EntropyEstimate,
    pub target: f64,
    pub inside_ci: bool,
    pub ks_distance: f64,
}

/// Sample `count` normalized k-th extremes, estimate their entropy with the
/// spacing estimator (window `m`, default `⌊√count⌋`) and compare with the
/// closed-form entropy of the limit law.
pub fn mc_convergence(
    parent: &ParentDistribution,
    k: u64,
    n: u64,
    count: usize,
    rng: &RandomStream,
    window: Option<usize>,
) -> Result<(McReport, SampleBatch)> {
    if count < MIN_MC_COUNT {
        return Err(Error::domain(format!(
            "Monte Carlo comparison needs count >= {MIN_MC_COUNT}, got {count}"
        )));
    }
    let model = FiniteModel::new(parent.clone(), n, k)?;
    let law = model.limit()?;
    let batch = sample_kth_extreme_par(&model, count, rng)?;
    let m = window.unwrap_or_else(|| default_window(count));
    let estimate = spacing_entropy(&batch.values, m)?;
    let target = law.entropy_closed_form();
    let ks = ks_distance(&batch.values, |x| law.cdf(x));
    let report = McReport {
        parent: parent.spec(),
        n,
        k,
        count,
        window: m,
        rng: *rng,
        norm: *model.norm(),
        law,
        estimate,
        target,
        inside_ci: estimate.covers(target),
        ks_distance: ks,
    };
    Ok((report, batch))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(spec: &str, n: u64, k: u64) -> FiniteModel {
        FiniteModel::new(ParentDistribution::parse(spec).unwrap(), n, k).unwrap()
    }

    #[test]
    fn same_stream_same_batch() {
        let m = model("exp", 1000, 2);
        let a = sample_kth_extreme(&m, 500, &RandomStream::new(3, 0)).unwrap();
        let b = sample_kth_extreme(&m, 500, &RandomStream::new(3, 0)).unwrap();
        let c = sample_kth_extreme(&m, 500, &RandomStream::new(3, 1)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.values, c.values);
        assert!(a.normalized);
    }

    #[test]
    fn parallel_sampler_is_deterministic() {
        let m = model("uniform", 100, 3);
        let rng = RandomStream::new(11, 0);
        let a = sample_kth_extreme_par(&m, 3 * CHUNK_SIZE + 17, &rng).unwrap();
        let b = sample_kth_extreme_par(&m, 3 * CHUNK_SIZE + 17, &rng).unwrap();
        assert_eq!(a.values.len(), 3 * CHUNK_SIZE + 17);
        assert_eq!(a, b);
        let first = sample_kth_extreme(&m, CHUNK_SIZE, &rng.substream(0)).unwrap();
        assert_eq!(&a.values[..CHUNK_SIZE], &first.values[..]);
    }

    #[test]
    fn rejects_empty_batch() {
        assert!(sample_kth_extreme(&model("exp", 10, 1), 0, &RandomStream::new(0, 0)).is_err());
    }

    #[test]
    fn spacing_is_affine_equivariant() {
        let x = sample_parent(&ParentDistribution::parse("exp").unwrap(), 5000, &RandomStream::new(1, 0))
            .unwrap();
        let y: Vec<f64> = x.iter().map(|v| 4.0 * v - 3.0).collect();
        let hx = spacing_entropy_default(&x).unwrap().value;
        let hy = spacing_entropy_default(&y).unwrap().value;
        assert!((hy - hx - 4f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn spacing_errors() {
        assert!(matches!(spacing_entropy(&[1.0, 2.0, 3.0], 1), Err(Error::Domain(_))));
        let ties = vec![1.0; 100];
        match spacing_entropy(&ties, 3) {
            Err(Error::Estimator(msg)) => assert!(msg.contains("99 tied")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn ks_of_exact_quantiles_is_small() {
        let values: Vec<f64> = (0..1000).map(|i| (i as f64 + 0.5) / 1000.0).collect();
        let d = ks_distance(&values, |x| x.clamp(0.0, 1.0));
        assert!((d - 0.0005).abs() < 1e-12);
        assert_eq!(ks_two_sample(&values, &values), 0.0);
        assert!((ks_two_sample(&[1.0, 2.0], &[3.0, 4.0]) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn csv_export_has_provenance_header() {
        let b = sample_kth_extreme(&model("exp", 100, 2), 3, &RandomStream::new(5, 0)).unwrap();
        let mut buf = Vec::new();
        b.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with("# parent=exponential:rate=1, n=100, k=2, a_n="));
        assert!(lines[0].ends_with("seed=5, stream=0"));
        assert_eq!(lines[1], "x");
        assert_eq!(lines.len(), 5);
    }
}
