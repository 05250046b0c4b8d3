use kext_core::finite::FiniteModel;
use kext_core::laws::{KExtremeLaw, LimitLaw};
use kext_core::parent::{catalog, NormingConstants, ParentDistribution};
use kext_core::sampling::{sample_parent, spacing_entropy, RandomStream};
use kext_core::special::{harmonic, log_beta};
use proptest::prelude::*;

fn any_law() -> impl Strategy<Value = LimitLaw> {
    prop_oneof![
        (0.3f64..8.0).prop_map(|alpha| LimitLaw::Frechet { alpha }),
        (0.3f64..8.0).prop_map(|alpha| LimitLaw::Weibull { alpha }),
        Just(LimitLaw::Gumbel),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn parent_quantile_inverts_cdf(idx in 0usize..5, p in 0.001f64..0.999) {
        let d = &catalog()[idx];
        let x = d.quantile(p).unwrap();
        let back = d.quantile(d.cdf(x)).unwrap();
        prop_assert!((back - x).abs() <= 1e-9 * x.abs().max(1.0));
    }

    #[test]
    fn inverse_sf_matches_quantile(idx in 0usize..5, q in 0.001f64..0.999) {
        let d = &catalog()[idx];
        let a = d.inverse_sf(q).unwrap();
        let b = d.quantile(1.0 - q).unwrap();
        prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
    }

    #[test]
    fn k_law_quantile_roundtrip(law in any_law(), k in 1u64..8, p in 0.001f64..0.999) {
        let kl = KExtremeLaw::new(law, k).unwrap();
        let x = kl.quantile(p).unwrap();
        prop_assert!((kl.cdf(x) - p).abs() < 1e-10);
    }

    #[test]
    fn k_law_cdf_is_monotone_in_k(law in any_law(), k in 1u64..8, p in 0.01f64..0.99) {
        // the k-th largest is stochastically smaller than the (k-1)-th
        let x = KExtremeLaw::new(law, 1).unwrap().quantile(p).unwrap();
        let a = KExtremeLaw::new(law, k).unwrap().cdf(x);
        let b = KExtremeLaw::new(law, k + 1).unwrap().cdf(x);
        prop_assert!(b >= a - 1e-15);
    }

    #[test]
    fn harmonic_recursion(k in 1u64..100_000) {
        prop_assert!((harmonic(k) - harmonic(k - 1) - 1.0 / k as f64).abs() < 1e-13);
    }

    #[test]
    fn log_beta_rank_symmetry(n in 2u64..5000, k_frac in 0.0f64..1.0) {
        // B(n, k) = B(n, n - k + 1)
        let k = 1 + ((n - 1) as f64 * k_frac) as u64;
        let a = log_beta(n, k).unwrap();
        let b = log_beta(n, n - k + 1).unwrap();
        prop_assert!((a - b).abs() <= 1e-10 * a.abs().max(1.0));
    }

    #[test]
    fn spacing_estimate_shifts_by_log_scale(scale in 0.01f64..100.0, shift in -50.0f64..50.0, seed in 0u64..1000) {
        let x = sample_parent(&ParentDistribution::parse("logistic").unwrap(), 2000, &RandomStream::new(seed, 0)).unwrap();
        let y: Vec<f64> = x.iter().map(|v| scale * v + shift).collect();
        let hx = spacing_entropy(&x, 20).unwrap().value;
        let hy = spacing_entropy(&y, 20).unwrap().value;
        prop_assert!((hy - hx - scale.ln()).abs() < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn finite_entropy_is_affine(idx in 0usize..5, n in 5u64..2000, k in 1u64..5, c in 0.2f64..5.0) {
        let d = catalog()[idx].clone();
        let m = FiniteModel::new(d.clone(), n, k).unwrap();
        let norm = *m.norm();
        let scaled = NormingConstants::new(n, c * norm.a_n, norm.b_n).unwrap();
        let m2 = FiniteModel::with_norming(d, k, scaled, m.domain()).unwrap();
        let h1 = m.entropy(1e-10).unwrap().value;
        let h2 = m2.entropy(1e-10).unwrap().value;
        prop_assert!((h2 - h1 + c.ln()).abs() < 1e-8);
    }

    #[test]
    fn finite_density_integrates_to_one(idx in 0usize..5, n in 2u64..100_000, k in 1u64..8) {
        prop_assume!(k <= n);
        let m = FiniteModel::new(catalog()[idx].clone(), n, k).unwrap();
        let mass = m.total_mass(1e-11).unwrap().value;
        prop_assert!((mass - 1.0).abs() < 1e-8, "mass {}", mass);
    }
}
