use std::fs::File;
use std::io::BufWriter;

use kext_core::finite::{self, FiniteModel, DEFAULT_SCHEDULE};
use kext_core::laws::{Family, KExtremeLaw, LimitLaw};
use kext_core::parent::{self, DomainTag, ParentDistribution};
use kext_core::sampling::{self, RandomStream};

use crate::args::{
    resolve_seed, ClassifyArgs, Config, ConvergeArgs, FiniteArgs, I1Args, LawsArgs, SimulateArgs,
};
use crate::error::CliError;
use crate::report::Table;

/// How a run that produced a report ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    /// A check carried by the report failed (exit 1).
    CheckFailed,
    /// Part of the report could not be computed (exit 3).
    Incomplete,
}

pub struct Outcome {
    pub table: Table,
    pub verdict: Verdict,
}

pub const LAWS_COLUMNS: &[&str] = &["family", "alpha", "k", "h_closed_form", "h_quadrature", "abs_diff"];
pub const FINITE_COLUMNS: &[&str] =
    &["parent", "n", "k", "a_n", "b_n", "h_gnk", "quad_error", "total_mass", "target", "gap"];
pub const CONVERGE_COLUMNS: &[&str] =
    &["n", "h_gnk", "quad_error", "target", "gap", "sup_density_gap", "status"];
pub const SIMULATE_COLUMNS: &[&str] = &[
    "parent",
    "n",
    "k",
    "count",
    "window",
    "seed",
    "stream",
    "a_n",
    "b_n",
    "estimate",
    "ci_low",
    "ci_high",
    "target",
    "inside_ci",
    "ks_distance",
];
pub const CLASSIFY_COLUMNS: &[&str] =
    &["parent", "domain", "alpha", "catalog_domain", "catalog_alpha", "n", "a_n", "b_n"];
pub const I1_COLUMNS: &[&str] = &["n", "k", "i1_exact", "i1_limit", "gap"];

fn parent_from(flag: &Option<String>, config: &Config) -> Result<ParentDistribution, CliError> {
    let spec = flag
        .clone()
        .or_else(|| config.parent.clone())
        .ok_or_else(|| CliError::Usage("--parent is required".into()))?;
    Ok(ParentDistribution::parse(&spec)?)
}

fn positive_tol(tol: f64) -> Result<f64, CliError> {
    if tol > 0.0 && tol.is_finite() {
        Ok(tol)
    } else {
        Err(CliError::Usage(format!("tolerance must be positive, got {tol}")))
    }
}

fn nonempty<T>(v: Vec<T>, what: &str) -> Result<Vec<T>, CliError> {
    if v.is_empty() {
        Err(CliError::Usage(format!("{what} grid is empty")))
    } else {
        Ok(v)
    }
}

pub fn laws(args: &LawsArgs, config: &Config) -> Result<Outcome, CliError> {
    let families = args
        .family
        .clone()
        .or_else(|| config.family.clone().map(|f| f.into_vec()))
        .unwrap_or_else(|| vec![Family::Frechet, Family::Weibull, Family::Gumbel]);
    let alphas = args
        .alpha
        .clone()
        .or_else(|| config.alpha.clone().map(|a| a.into_vec()))
        .unwrap_or_else(|| vec![0.5, 1.0, 2.0, 5.0]);
    let ks = args
        .k
        .clone()
        .or_else(|| config.k.clone().map(|k| k.into_vec()))
        .unwrap_or_else(|| (1..=6).collect());
    let tol = positive_tol(args.tol.or(config.tol).unwrap_or(1e-8))?;
    let families = nonempty(families, "family")?;
    let ks = nonempty(ks, "k")?;
    if families.iter().any(|f| *f != Family::Gumbel) {
        nonempty(alphas.clone(), "alpha")?;
    }

    let mut laws = Vec::new();
    for family in &families {
        if *family == Family::Gumbel {
            laws.push(LimitLaw::Gumbel);
        } else {
            for &alpha in &alphas {
                laws.push(LimitLaw::from_family(*family, Some(alpha))?);
            }
        }
    }

    let mut table = Table::new("laws", LAWS_COLUMNS);
    let mut verdict = Verdict::Pass;
    for law in laws {
        for &k in &ks {
            let kl = KExtremeLaw::new(law, k)?;
            let closed = kl.entropy_closed_form();
            let quad = kl.entropy_quadrature(0.01 * tol)?.value;
            let diff = (closed - quad).abs();
            if diff.is_nan() || diff > tol {
                verdict = Verdict::CheckFailed;
            }
            table.push(vec![
                law.family().to_string().into(),
                law.alpha().into(),
                k.into(),
                closed.into(),
                quad.into(),
                diff.into(),
            ]);
        }
    }
    Ok(Outcome { table, verdict })
}

pub fn finite(args: &FiniteArgs, config: &Config) -> Result<Outcome, CliError> {
    let parent = parent_from(&args.parent, config)?;
    let n = args.n.or(config.n).ok_or_else(|| CliError::Usage("--n is required".into()))?;
    let k = args.k.or(config.k_single()?).unwrap_or(2);
    let tol = positive_tol(args.tol.or(config.tol).unwrap_or(1e-10))?;

    let model = FiniteModel::new(parent.clone(), n, k)?;
    let target = model.limit()?.entropy_closed_form();
    let h = model.entropy(tol)?;
    let mass = model.total_mass(tol)?.value;
    let norm = model.norm();
    let mut table = Table::new("finite", FINITE_COLUMNS);
    table.push(vec![
        parent.spec().into(),
        n.into(),
        k.into(),
        norm.a_n.into(),
        norm.b_n.into(),
        h.value.into(),
        h.error_bound.into(),
        mass.into(),
        target.into(),
        (h.value - target).abs().into(),
    ]);
    Ok(Outcome { table, verdict: Verdict::Pass })
}

pub fn converge(args: &ConvergeArgs, config: &Config) -> Result<Outcome, CliError> {
    let parent = parent_from(&args.parent, config)?;
    let k = args.k.or(config.k_single()?).unwrap_or(2);
    let schedule = args
        .schedule
        .clone()
        .or_else(|| config.schedule.clone().map(|s| s.into_vec()))
        .unwrap_or_else(|| DEFAULT_SCHEDULE.to_vec());
    let tol = positive_tol(args.tol.or(config.tol).unwrap_or(1e-10))?;

    let report = finite::convergence_report(&parent, k, &schedule, None, tol)?;
    let mut table = Table::new("converge", CONVERGE_COLUMNS);
    for e in &report.entries {
        table.push(vec![
            e.n.into(),
            e.entropy.into(),
            e.quad_error.into(),
            report.target.into(),
            e.gap.into(),
            e.sup_gap.into(),
            e.status.as_str().into(),
        ]);
    }
    let verdict = if !report.all_ok() {
        Verdict::Incomplete
    } else if report.gaps_decreasing() {
        Verdict::Pass
    } else {
        Verdict::CheckFailed
    };
    Ok(Outcome { table, verdict })
}

pub fn simulate(args: &SimulateArgs, config: &Config) -> Result<Outcome, CliError> {
    let parent = parent_from(&args.parent, config)?;
    let k = args.k.or(config.k_single()?).unwrap_or(2);
    let n = args.n.or(config.n).unwrap_or(100_000);
    let count = args.count.or(config.count).unwrap_or(200_000);
    let seed = resolve_seed(args.seed, config.seed)?;
    let stream = args.stream.or(config.stream).unwrap_or(0);
    let window = args.window.or(config.window);
    let batch_out = args.batch_out.clone().or_else(|| config.batch_out.clone());

    let count = usize::try_from(count).map_err(|_| CliError::Usage("--count too large".into()))?;
    let window = window.map(|w| w as usize);
    let rng = RandomStream::new(seed, stream);
    let (report, batch) = sampling::mc_convergence(&parent, k, n, count, &rng, window)?;

    if let Some(path) = batch_out {
        let file = File::create(&path)
            .map_err(|e| CliError::Setup(format!("cannot write {}: {e}", path.display())))?;
        batch.write_csv(BufWriter::new(file))?;
    }

    let (ci_low, ci_high) = match report.estimate.ci {
        Some((lo, hi)) => (Some(lo), Some(hi)),
        None => (None, None),
    };
    let mut table = Table::new("simulate", SIMULATE_COLUMNS);
    table.push(vec![
        report.parent.into(),
        n.into(),
        k.into(),
        (count as u64).into(),
        (report.window as u64).into(),
        seed.into(),
        stream.into(),
        report.norm.a_n.into(),
        report.norm.b_n.into(),
        report.estimate.value.into(),
        ci_low.into(),
        ci_high.into(),
        report.target.into(),
        report.inside_ci.into(),
        report.ks_distance.into(),
    ]);
    Ok(Outcome { table, verdict: Verdict::Pass })
}

pub fn classify(args: &ClassifyArgs, config: &Config) -> Result<Outcome, CliError> {
    let parent = parent_from(&args.parent, config)?;
    let n = args.n.or(config.n).unwrap_or(1000);
    if n < 2 {
        return Err(CliError::Usage(format!("--n must be at least 2, got {n}")));
    }
    let tag = parent::classify(&parent)?;
    let catalog = parent.analytic_domain();
    let norm = match tag {
        DomainTag::Unknown => None,
        tag => Some(parent::norming_constants(&parent, tag, n)?),
    };
    let mut table = Table::new("classify", CLASSIFY_COLUMNS);
    table.push(vec![
        parent.spec().into(),
        tag.name().into(),
        tag.alpha().into(),
        catalog.map(|c| c.name()).into(),
        catalog.and_then(|c| c.alpha()).into(),
        n.into(),
        norm.map(|c| c.a_n).into(),
        norm.map(|c| c.b_n).into(),
    ]);
    let verdict = if tag == DomainTag::Unknown { Verdict::Incomplete } else { Verdict::Pass };
    Ok(Outcome { table, verdict })
}

pub fn i1(args: &I1Args, config: &Config) -> Result<Outcome, CliError> {
    let k = args.k.or(config.k_single()?).unwrap_or(2);
    let schedule = args
        .schedule
        .clone()
        .or_else(|| config.schedule.clone().map(|s| s.into_vec()))
        .unwrap_or_else(|| vec![10, 100, 1_000, 10_000, 100_000, 1_000_000]);
    let schedule = nonempty(schedule, "schedule")?;
    if k < 1 {
        return Err(CliError::Usage("--k must be at least 1".into()));
    }
    let min_n = *schedule.iter().min().expect("nonempty");
    if k >= min_n {
        return Err(CliError::Usage(format!("--k must be below every schedule entry, got k={k}, n={min_n}")));
    }
    let limit = finite::i1_limit(k)?;
    let mut table = Table::new("i1", I1_COLUMNS);
    for &n in &schedule {
        let exact = finite::i1_exact(n, k)?;
        table.push(vec![n.into(), k.into(), exact.into(), limit.into(), (exact - limit).abs().into()]);
    }
    Ok(Outcome { table, verdict: Verdict::Pass })
}
