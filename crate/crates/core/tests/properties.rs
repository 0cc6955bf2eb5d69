use kcoherence_core::linalg::{max_abs_diff, min_eigenvalue};
use kcoherence_core::maps::build_two_outcome;
use kcoherence_core::measures::{geometric_k, geometric_k_oracle, robustness_k};
use kcoherence_core::oracles::sampling::{random_ik_member, rng_from_seed};
use kcoherence_core::oracles::{certify_in_ik, sample_pure};
use kcoherence_core::transforms::max_conversion_probability;
use kcoherence_core::{CoherenceLevel, DensityOperator, OracleBudget, PureState, C64};
use proptest::prelude::*;

fn level(k: usize, d: usize) -> CoherenceLevel {
    CoherenceLevel::new(k, d).unwrap()
}

fn dim_and_seed() -> impl Strategy<Value = (usize, u64)> {
    (2usize..=6, any::<u64>())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn robustness_is_bounded_and_monotone((d, seed) in dim_and_seed()) {
        let s = sample_pure(d, seed, None).unwrap();
        let mut prev_r = f64::INFINITY;
        let mut prev_g = f64::INFINITY;
        for k in 2..=d {
            let r = robustness_k(&s, level(k, d)).unwrap().value;
            prop_assert!(r >= 0.0);
            prop_assert!(r <= d as f64 / k as f64 - 1.0 + 1e-12);
            prop_assert!(r <= prev_r + 1e-12);
            prev_r = r;
            let g = geometric_k(&s, level(k, d)).unwrap().value;
            prop_assert!((0.0..1.0).contains(&g));
            prop_assert!(g <= prev_g + 1e-12);
            prev_g = g;
        }
        prop_assert_eq!(robustness_k(&s, level(d, d)).unwrap().value, 0.0);
    }

    #[test]
    fn geometric_matches_subset_enumeration((d, seed) in dim_and_seed(), k in 2usize..=6) {
        prop_assume!(k <= d);
        let s = sample_pure(d, seed, None).unwrap();
        let g = geometric_k(&s, level(k, d)).unwrap().value;
        prop_assert!((g - geometric_k_oracle(&s, level(k, d)).unwrap()).abs() <= 1e-10);
    }

    #[test]
    fn measures_ignore_basis_relabelling((d, seed) in dim_and_seed(), shift in 0usize..6, phase in 0.0f64..6.3) {
        let s = sample_pure(d, seed, None).unwrap();
        let perm: Vec<usize> = (0..d).map(|i| (i + shift) % d).rev().collect();
        let phases: Vec<f64> = (0..d).map(|i| phase * (i as f64 + 1.0)).collect();
        let t = s.permuted(&perm).unwrap().with_phases(&phases).unwrap();
        for k in 2..=d {
            let lv = level(k, d);
            prop_assert!((robustness_k(&s, lv).unwrap().value - robustness_k(&t, lv).unwrap().value).abs() <= 1e-12);
            prop_assert!((geometric_k(&s, lv).unwrap().value - geometric_k(&t, lv).unwrap().value).abs() <= 1e-12);
        }
    }

    #[test]
    fn conversion_is_possible_both_ways(d in 3usize..=6, a in any::<u64>(), b in any::<u64>(), kk in 0usize..4) {
        let k = 2 + kk % (d - 2);
        let lv = level(k, d);
        let s = sample_pure(d, a, Some(k + 1)).unwrap();
        let t = sample_pure(d, b, Some(k + 1)).unwrap();
        let forward = max_conversion_probability(&s, &t, lv).unwrap();
        let backward = max_conversion_probability(&t, &s, lv).unwrap();
        prop_assert!(forward > 0.0 && forward <= 1.0);
        prop_assert!(backward > 0.0 && backward <= 1.0);
        let u = PureState::maximally_coherent(d).unwrap();
        prop_assert_eq!(max_conversion_probability(&u, &t, lv).unwrap(), 1.0);
    }

    #[test]
    fn two_outcome_maps_are_positive_and_trace_non_increasing(
        (d, seed) in dim_and_seed(),
        p in 0.01f64..=1.0,
        w in 0.0f64..=1.0,
    ) {
        let psi = sample_pure(d, seed, None).unwrap();
        let r1 = DensityOperator::from_pure(&sample_pure(d, seed ^ 1, None).unwrap());
        let r2 = DensityOperator::from_pure(&sample_pure(d, seed ^ 2, None).unwrap());
        let map = build_two_outcome(psi.projector(), r1, r2, p).unwrap();
        let a = sample_pure(d, seed ^ 3, None).unwrap().projector();
        let b = sample_pure(d, seed ^ 4, None).unwrap().projector();
        let sigma = DensityOperator::new(a.scale(w) + b.scale(1.0 - w)).unwrap();
        let out = map.apply(&sigma);
        prop_assert!(min_eigenvalue(out.matrix()) >= -1e-12);
        prop_assert!(out.trace() <= sigma.trace() + 1e-12);
        let expected = sigma.trace() - (1.0 - p) * map.effect_weight(&sigma);
        prop_assert!((out.trace() - expected).abs() <= 1e-10);
        let linear = map.apply_matrix(&a).scale(w) + map.apply_matrix(&b).scale(1.0 - w);
        prop_assert!(max_abs_diff(out.matrix(), &linear) <= 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn certificates_revalidate(d in 2usize..=5, kk in 0usize..4, seed in any::<u64>()) {
        let k = 1 + kk % d;
        let lv = level(k, d);
        let mut rng = rng_from_seed(seed);
        let (rho, _) = random_ik_member(&mut rng, d, lv);
        let budget = OracleBudget::default();
        let m = certify_in_ik(&rho, lv, &budget).unwrap();
        if let Some(cert) = m.certificate() {
            prop_assert!(cert.residual <= budget.tolerance);
            prop_assert!((cert.distance_to(rho.matrix()) - cert.residual).abs() <= 1e-12);
            prop_assert!(cert.components.len() <= d * d);
            prop_assert!(cert.components.iter().all(|c| c.weight > 0.0 && c.state.rank() <= k));
        }
        prop_assert_eq!(&m, &certify_in_ik(&rho, lv, &budget).unwrap());
    }

    #[test]
    fn full_level_always_certifies(d in 2usize..=6, seed in any::<u64>()) {
        let mut rng = rng_from_seed(seed);
        let (rho, _) = random_ik_member(&mut rng, d, level(d, d));
        let m = certify_in_ik(&rho, level(d, d), &OracleBudget::default()).unwrap();
        prop_assert!(m.is_certified());
    }
}

#[test]
fn raising_source_coherence_keeps_feasibility() {
    // Interpolate from a weak source towards the uniform state: once feasible, stays feasible.
    let d = 4;
    let lv = level(2, d);
    let target = sample_pure(d, 9, Some(4)).unwrap();
    let weak = [0.97f64, 0.01, 0.01, 0.01];
    let mut seen = false;
    for step in 0..=50 {
        let t = step as f64 / 50.0;
        let probs: Vec<f64> = weak.iter().map(|&x| (1.0 - t) * x + t * 0.25).collect();
        let amps: Vec<C64> = probs.iter().map(|&x| C64::new(x.sqrt(), 0.0)).collect();
        let s = PureState::normalized(amps).unwrap();
        let feasible = max_conversion_probability(&s, &target, lv).unwrap() == 1.0;
        assert!(!seen || feasible, "feasibility lost at step {step}");
        seen |= feasible;
    }
    assert!(seen);
}
