use kext_core::finite::{convergence_report, i1_exact, i1_limit, FiniteModel, DEFAULT_SCHEDULE};
use kext_core::laws::{KExtremeLaw, LimitLaw};
use kext_core::parent::{catalog, ParentDistribution};
use kext_core::quadrature;
use kext_core::special::{harmonic, log_gamma, EULER_GAMMA};

fn parent(spec: &str) -> ParentDistribution {
    ParentDistribution::parse(spec).unwrap()
}

/// Beta integral of the rescaled variable n(1 - T), T ~ Beta(n-k+1, k).
fn i1_oracle(n: u64, k: u64) -> f64 {
    let (nf, kf) = (n as f64, k as f64);
    let ln_b = log_gamma(kf).unwrap() + log_gamma(nf - kf + 1.0).unwrap() - log_gamma(nf + 1.0).unwrap();
    let lp = |t: f64| (nf - kf) * t.ln() + (kf - 1.0) * (-t).ln_1p() - ln_b;
    let r = quadrature::integrate(
        |t| {
            if t <= 0.0 || t >= 1.0 {
                return 0.0;
            }
            let l = lp(t);
            l.exp() * l
        },
        0.0,
        1.0,
        1e-11,
    )
    .unwrap();
    assert!(r.converged);
    r.value - nf.ln()
}

#[test]
fn i1_matches_beta_integral() {
    for n in 2..=50u64 {
        for k in 1..=5u64.min(n - 1) {
            let got = i1_exact(n, k).unwrap();
            let want = i1_oracle(n, k);
            assert!((got - want).abs() <= 1e-7, "n={n} k={k}: {got} vs {want}");
        }
    }
}

#[test]
fn i1_limit_at_large_n() {
    for k in 2..=5 {
        assert!((i1_exact(1_000_000, k).unwrap() - i1_limit(k).unwrap()).abs() < 1e-4);
    }
}

#[test]
fn density_integrates_to_one() {
    for d in catalog() {
        for n in [10u64, 100, 1000] {
            for k in [1u64, 2, 3, 5] {
                let m = FiniteModel::new(d.clone(), n, k).unwrap();
                let mass = m.total_mass(1e-11).unwrap().value;
                assert!((mass - 1.0).abs() <= 1e-8, "{d} n={n} k={k}: {mass}");
            }
        }
    }
}

#[test]
fn entropy_decomposes_into_i1_and_i2() {
    for d in catalog() {
        for (n, k) in [(5u64, 1u64), (10, 2), (20, 3), (50, 5)] {
            let m = FiniteModel::new(d.clone(), n, k).unwrap();
            let h = m.entropy(1e-10).unwrap().value;
            let i2 = m.i2_quadrature(1e-10).unwrap();
            let i1 = i1_exact(n, k).unwrap();
            assert!((h + i1 + i2).abs() <= 1e-6, "{d} n={n} k={k}: h={h} i1={i1} i2={i2}");
        }
    }
}

#[test]
fn entropy_plus_i2_approaches_limit() {
    for spec in ["pareto:alpha=2", "uniform", "exp"] {
        let k = 2;
        let m = FiniteModel::new(parent(spec), 100_000, k).unwrap();
        let lhs = m.entropy(1e-10).unwrap().value + m.i2_quadrature(1e-10).unwrap();
        let kf = k as f64;
        let rhs = log_gamma(kf).unwrap() + kf + (kf - 1.0) * (EULER_GAMMA - harmonic(k - 1));
        assert!((lhs - rhs).abs() < 5e-3, "{spec}: {lhs} vs {rhs}");
    }
}

#[test]
fn pareto_entropy_near_limit_at_ten_thousand() {
    let m = FiniteModel::new(parent("pareto:alpha=2"), 10_000, 2).unwrap();
    let h = m.entropy(1e-10).unwrap().value;
    let target = 2.0 - 2f64.ln() - 2.5 * (1.0 - EULER_GAMMA);
    assert!((h - target).abs() < 0.01);
}

#[test]
fn convergence_reports_for_three_domains() {
    for (spec, target) in [
        ("pareto:alpha=2", 2.0 - 2f64.ln() - 2.5 * (1.0 - EULER_GAMMA)),
        ("uniform", 1.0 + EULER_GAMMA),
        ("exp", 2.0 * EULER_GAMMA),
    ] {
        let r = convergence_report(&parent(spec), 2, &DEFAULT_SCHEDULE, None, 1e-10).unwrap();
        assert!((r.target - target).abs() < 1e-12);
        assert!(r.all_ok(), "{spec}: {:?}", r.entries);
        assert!(r.gaps_decreasing(), "{spec}: {:?}", r.entries);
        assert!(r.sup_gaps_decreasing(), "{spec}: {:?}", r.entries);
        let last = r.entries.last().unwrap();
        assert!(last.gap.unwrap() < 0.01 && last.sup_gap.unwrap() < 0.01);
    }
}

#[test]
fn report_is_reproducible() {
    let a = convergence_report(&parent("logistic"), 3, &[100, 1000], None, 1e-9).unwrap();
    let b = convergence_report(&parent("logistic"), 3, &[100, 1000], None, 1e-9).unwrap();
    assert_eq!(a, b);
}

#[test]
fn gumbel_k_mean() {
    for k in 1..=6u64 {
        let law = KExtremeLaw::new(LimitLaw::Gumbel, k).unwrap();
        let mean = law.integrate_with_density(|x, lp| x * lp.exp(), 1e-12).unwrap();
        assert!(mean.converged);
        assert!((mean.value - (EULER_GAMMA - harmonic(k - 1))).abs() <= 1e-8, "k={k}");
    }
}
