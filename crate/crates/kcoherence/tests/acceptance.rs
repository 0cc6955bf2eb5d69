//! Acceptance suite. Runs every criterion, prints one line each and exits
//! non-zero if any fails.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use kcoherence::io::state_to_json;
use kcoherence_core::linalg::max_abs_diff;
use kcoherence_core::maps::{build_k_preserving, build_two_outcome, verify_on, verify_preserves_ik};
use kcoherence_core::measures::{geometric_k, geometric_k_oracle, robustness_k, robustness_k_oracle};
use kcoherence_core::oracles::sampling::{
    derive_seed, random_density, random_ik_member, random_permutation, rng_from_seed,
};
use kcoherence_core::oracles::{certify_in_ik, optimal_delta, sample_pure, Membership};
use kcoherence_core::transforms::{corollary_check, max_conversion_probability, nonisolation_witness};
use kcoherence_core::{CoherenceLevel, DensityOperator, OracleBudget, PureState};
use rand::Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn level(k: usize, d: usize) -> CoherenceLevel {
    CoherenceLevel::new(k, d).unwrap()
}

/// `(d, k)` for trial `i` with `d ∈ {3, 4}` and `2 ≤ k < d`.
fn small_case(i: usize) -> (usize, usize) {
    [(3, 2), (4, 2), (4, 3)][i % 3]
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn robustness_vs_oracle() -> Outcome {
    let budget = OracleBudget::default();
    let mut worst = 0.0f64;
    let mut unconverged = 0;
    for i in 0..500 {
        let (d, k) = small_case(i);
        let s = sample_pure(d, derive_seed(1, i as u64), None).unwrap();
        let r = robustness_k(&s, level(k, d)).unwrap().value;
        let o = robustness_k_oracle(&DensityOperator::from_pure(&s), level(k, d), &budget).unwrap();
        worst = worst.max((o.value - r).abs());
        unconverged += usize::from(!o.converged);
    }
    check(
        worst <= 1e-3,
        format!("500 states, max |formula - oracle| = {worst:.2e}, {unconverged} unconverged"),
    )
}

fn geometric_vs_oracle() -> Outcome {
    let mut worst = 0.0f64;
    for i in 0..1000 {
        let d = 3 + i % 4;
        let s = sample_pure(d, derive_seed(2, i as u64), None).unwrap();
        for k in 2..=d {
            let g = geometric_k(&s, level(k, d)).unwrap().value;
            worst = worst.max((g - geometric_k_oracle(&s, level(k, d)).unwrap()).abs());
        }
    }
    check(worst <= 1e-10, format!("1000 states, all k, max deviation {worst:.2e}"))
}

fn symmetric_values() -> Outcome {
    let mut worst = 0.0f64;
    for d in 2..=6 {
        let u = PureState::maximally_coherent(d).unwrap();
        for k in 2..=d {
            let r = robustness_k(&u, level(k, d)).unwrap().value;
            let g = geometric_k(&u, level(k, d)).unwrap().value;
            worst = worst.max((r - (d as f64 / k as f64 - 1.0)).abs());
            worst = worst.max((g - (1.0 - (k as f64 - 1.0) / d as f64)).abs());
        }
    }
    check(worst <= 1e-12, format!("d = 2..6, max deviation {worst:.2e}"))
}

fn trace_contract() -> Outcome {
    let mut rng = rng_from_seed(4);
    let (mut worst, mut worst_unit) = (0.0f64, 0.0f64);
    for i in 0..200 {
        let d = 2 + i % 4;
        let psi = sample_pure(d, derive_seed(4, i as u64), None).unwrap();
        let p = if i % 4 == 0 { 1.0 } else { rng.gen_range(0.01..1.0) };
        let map = build_two_outcome(
            psi.projector(),
            random_density(&mut rng, d, 1 + i % d),
            random_density(&mut rng, d, d),
            p,
        )
        .unwrap();
        let scale: f64 = rng.gen_range(0.2..=1.0);
        let sigma = DensityOperator::new(random_density(&mut rng, d, 1 + (i / 4) % d).matrix().scale(scale)).unwrap();
        let out = map.apply(&sigma);
        let err = (out.trace() - (sigma.trace() - (1.0 - p) * map.effect_weight(&sigma))).abs();
        worst = worst.max(err);
        if p == 1.0 {
            worst_unit = worst_unit.max((out.trace() - sigma.trace()).abs());
        }
    }
    check(
        worst <= 1e-10 && worst_unit <= 1e-10,
        format!("200 pairs, max trace error {worst:.2e}, p = 1 max |Tr Λσ - Tr σ| {worst_unit:.2e}"),
    )
}

fn preservation() -> Outcome {
    let budget = OracleBudget::default();
    let (mut trials, mut scalar, mut certified, mut repassed, mut worst) = (0, 0, 0, 0, 0.0f64);
    let mut unresolved = Vec::new();
    for i in 0..100 {
        let (d, k) = small_case(i);
        let lv = level(k, d);
        let s = sample_pure(d, derive_seed(5, 2 * i as u64), Some(k + 1)).unwrap();
        let t = sample_pure(d, derive_seed(5, 2 * i as u64 + 1), Some(k + 1)).unwrap();
        let p = max_conversion_probability(&s, &t, lv).unwrap();
        let map = build_k_preserving(&s, &t, lv, p, &budget).map_err(|e| format!("map {i}: {e}"))?;
        let report = verify_preserves_ik(&map, 50, &budget, derive_seed(50, i as u64)).unwrap();
        let mut rng = rng_from_seed(derive_seed(50, i as u64));
        for (j, outcome) in report.trials.iter().enumerate() {
            // Replays the sampler to recover σ for re-checks.
            let (sigma, _) = random_ik_member(&mut rng, d, lv);
            if (map.base.effect_weight(&sigma) - outcome.overlap).abs() > 0.0 {
                return Err(format!("map {i}: replayed input {j} does not match the verified one"));
            }
            trials += 1;
            scalar += usize::from(outcome.scalar_ok);
            match &outcome.membership {
                Membership::Certified(c) => {
                    certified += 1;
                    worst = worst.max(c.residual);
                }
                Membership::Inconclusive { .. } => {
                    let again = verify_on(&map, &sigma, &budget.scaled(10)).unwrap();
                    if again.membership.is_certified() {
                        repassed += 1;
                    } else {
                        unresolved.push((i, j));
                    }
                }
            }
        }
    }
    let rate = certified as f64 / trials as f64;
    check(
        scalar == trials && rate >= 0.99 && worst <= 1e-7 && unresolved.is_empty(),
        format!(
            "{trials} trials, scalar {scalar}/{trials}, certified {certified}/{trials} (max residual {worst:.2e}), \
             {repassed} re-passed at 10x budget, unresolved {unresolved:?}"
        ),
    )
}

fn positivity_and_conversion() -> Outcome {
    let budget = OracleBudget::default();
    let (mut min_p, mut worst) = (f64::INFINITY, 0.0f64);
    for i in 0..200 {
        let (d, k) = small_case(i);
        let lv = level(k, d);
        let s = sample_pure(d, derive_seed(6, 2 * i as u64), Some(k + 1)).unwrap();
        let t = sample_pure(d, derive_seed(6, 2 * i as u64 + 1), Some(k + 1)).unwrap();
        let forward = max_conversion_probability(&s, &t, lv).unwrap();
        let backward = max_conversion_probability(&t, &s, lv).unwrap();
        min_p = min_p.min(forward).min(backward);
        let map = build_k_preserving(&s, &t, lv, forward, &budget).map_err(|e| format!("pair {i}: {e}"))?;
        let out = map.apply(&DensityOperator::from_pure(&s));
        worst = worst.max(max_abs_diff(out.matrix(), &t.projector().scale(forward)));
    }
    check(
        min_p > 0.0 && worst <= 1e-12,
        format!("200 pairs, min p_max over both directions {min_p:.3e}, max |Λ(ψ1) - pψ2| {worst:.2e}"),
    )
}

fn corollary() -> Outcome {
    let budget = OracleBudget::default();
    let mut failures = 0;
    for (d, k) in [(3, 2), (4, 2), (4, 3)] {
        let report = corollary_check(d, level(k, d), 200, 7 + d as u64 * 10 + k as u64, &budget).unwrap();
        failures += report.failures.len();
    }
    check(
        failures == 0,
        format!("(3,2), (4,2), (4,3) x 200 targets, {failures} failures"),
    )
}

fn nonisolation() -> Outcome {
    let budget = OracleBudget::default();
    let (mut slack, mut worst, mut distinct_from_uniform) = (f64::INFINITY, 0.0f64, 0);
    let u4 = PureState::maximally_coherent(4).unwrap();
    for i in 0..100 {
        let k = 2 + i % 2;
        let lv = level(k, 4);
        let t = sample_pure(4, derive_seed(8, i as u64), Some(k + 1)).unwrap();
        let w = nonisolation_witness(&t, lv, &budget, i as u64).map_err(|e| format!("target {i}: {e}"))?;
        let g = geometric_k(&w.source, level(k + 1, 4)).unwrap().value;
        let threshold = 1.0 - 1.0 / (robustness_k(&t, lv).unwrap().value + 1.0);
        slack = slack.min(g - threshold);
        let out = w.map.apply(&DensityOperator::from_pure(&w.source));
        worst = worst.max(max_abs_diff(out.matrix(), &t.projector()));
        let dist = kcoherence_core::linalg::frobenius(&(w.source.projector() - u4.projector()));
        distinct_from_uniform += usize::from(dist > 1e-6);
    }
    check(
        slack >= -1e-12 && worst <= 1e-10,
        format!(
            "100 targets, min G - threshold {slack:.3e}, max map error {worst:.2e}, \
             {distinct_from_uniform} witnesses differ from the uniform state"
        ),
    )
}

fn invariance_and_hierarchy() -> Outcome {
    let mut rng = rng_from_seed(9);
    let (mut worst, mut violations) = (0.0f64, 0);
    for i in 0..100 {
        let d = 2 + i % 5;
        let s = sample_pure(d, derive_seed(9, i as u64), None).unwrap();
        let values = |x: &PureState| -> Vec<(f64, f64)> {
            (2..=d)
                .map(|k| {
                    (
                        robustness_k(x, level(k, d)).unwrap().value,
                        geometric_k(x, level(k, d)).unwrap().value,
                    )
                })
                .collect()
        };
        let base = values(&s);
        for w in base.windows(2) {
            violations += usize::from(w[1].0 > w[0].0 + 1e-12 || w[1].1 > w[0].1 + 1e-12);
        }
        for _ in 0..20 {
            let perm = random_permutation(&mut rng, d);
            let phases: Vec<f64> = (0..d).map(|_| rng.gen_range(0.0..std::f64::consts::TAU)).collect();
            let moved = s.permuted(&perm).unwrap().with_phases(&phases).unwrap();
            for (a, b) in base.iter().zip(values(&moved)) {
                worst = worst.max((a.0 - b.0).abs()).max((a.1 - b.1).abs());
            }
        }
    }
    check(
        worst <= 1e-12 && violations == 0,
        format!("100 states x 20 transforms, max deviation {worst:.2e}, {violations} monotonicity violations"),
    )
}

fn run_cli(args: &[&str]) -> Vec<u8> {
    let out = Command::new(env!("CARGO_BIN_EXE_kcoh"))
        .args(args)
        .output()
        .expect("kcoh runs");
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    out.stdout
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let write = |name: &str, s: &PureState| {
        let p = dir.path().join(name);
        std::fs::write(&p, state_to_json(s)).unwrap();
        p
    };
    let path = |p: &Path| p.to_str().unwrap().to_owned();
    let src = path(&write("s.json", &sample_pure(4, 1, Some(4)).unwrap()));
    let tgt = path(&write("t.json", &sample_pure(4, 2, Some(4)).unwrap()));
    let commands: Vec<Vec<String>> = [
        vec!["measure", &src, "--k", "2", "--oracle", "--seed", "5"],
        vec!["convert", &src, &tgt, "--k", "2"],
        vec!["convert", &tgt, &src, "--k", "3", "--p", "0.05"],
        vec!["sweep", "--dim", "4", "--k", "2", "--pairs", "40", "--seed", "3"],
        vec!["witness", &tgt, "--k", "3", "--seed", "11"],
        vec!["sample", "--dim", "5", "--seed", "8", "--min-rank", "5"],
    ]
    .iter()
    .map(|c| c.iter().map(|s| s.to_string()).collect())
    .collect();
    let mut differing = Vec::new();
    for c in &commands {
        let args: Vec<&str> = c.iter().map(String::as_str).collect();
        if run_cli(&args) != run_cli(&args) {
            differing.push(c[0].clone());
        }
    }

    let budget = OracleBudget::default().with_seed(17);
    let oracle_run = || -> String {
        let mut rng = rng_from_seed(10);
        let lv = level(3, 5);
        let (rho, _) = random_ik_member(&mut rng, 5, lv);
        let s = sample_pure(4, 21, Some(4)).unwrap();
        let t = sample_pure(4, 22, Some(4)).unwrap();
        let map = build_k_preserving(
            &s,
            &t,
            level(2, 4),
            max_conversion_probability(&s, &t, level(2, 4)).unwrap(),
            &budget,
        )
        .unwrap();
        format!(
            "{:?}{:?}{:?}{:?}{:?}",
            certify_in_ik(&rho, lv, &budget).unwrap(),
            optimal_delta(&t, level(3, 4), &budget).unwrap(),
            robustness_k_oracle(&random_density(&mut rng, 4, 4), level(2, 4), &budget).unwrap(),
            verify_preserves_ik(&map, 10, &budget, 4).unwrap(),
            nonisolation_witness(&t, level(2, 4), &budget, 6).unwrap(),
        )
    };
    if oracle_run() != oracle_run() {
        differing.push("oracles".into());
    }
    check(
        differing.is_empty(),
        format!(
            "{} CLI commands and 5 oracles run twice, differing: {differing:?}",
            commands.len()
        ),
    )
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("robustness formula vs oracle", robustness_vs_oracle),
        ("geometric formula vs subset enumeration", geometric_vs_oracle),
        ("maximally coherent closed values", symmetric_values),
        ("two-outcome trace contract", trace_contract),
        ("I_k preservation at the conversion bound", preservation),
        (
            "positive conversion probability and exact conversion",
            positivity_and_conversion,
        ),
        ("uniform state converts to every resource state", corollary),
        ("non-isolation witnesses", nonisolation),
        ("invariance and monotonicity in k", invariance_and_hierarchy),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (n, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (verdict, detail) = match run() {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!(
            "criterion {:>2} {verdict} {name}: {detail} [{:.1?}]",
            n + 1,
            start.elapsed()
        );
    }
    println!(
        "acceptance: {} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
