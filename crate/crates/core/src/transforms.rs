//! Conversion decisions between pure resource states at level `k`.
//!
//! Everything here hinges on the ratio
//! `G_{k+1}(ψ₁) / (R_k(ψ₂)·[1 − G_{k+1}(ψ₁)])`. It bounds the probability `p`
//! with which the map of [`maps::build_k_preserving`] sends `ψ₁` to `ψ₂`, and
//! reaching 1 is sufficient for deterministic conversion. The condition is not
//! claimed to be necessary: `deterministic_feasible == false` means "not
//! certified by this construction", not "impossible".

use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{self, C64};
use crate::maps::{self, build_k_preserving, KCoherencePreservingMap, BOUND_SLACK};
use crate::measures::{geometric_k, robustness_k};
use crate::oracles::sampling::{derive_seed, rng_from_seed, sample_pure, standard_normal};
use crate::oracles::OracleBudget;
use crate::statespace::{CoherenceLevel, DensityOperator, PureState};

/// Entrywise tolerance when checking `Λ(ψ₁) = p·ψ₂`.
pub const CONVERSION_TOL: f64 = 1e-10;
/// Minimum projector distance for a witness to count as a different state.
pub const DISTINCT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct ConversionReport {
    pub source: PureState,
    pub target: PureState,
    pub level: CoherenceLevel,
    /// `G_{k+1}(source)`.
    pub g_source: f64,
    /// `R_k(target)`.
    pub r_target: f64,
    /// Unclamped bound `g/(r(1−g))`.
    pub ratio: f64,
    /// Bound clamped to `(0, 1]`.
    pub p_max: f64,
    pub deterministic_feasible: bool,
    pub map: Option<KCoherencePreservingMap>,
}

fn clamp_ratio(ratio: f64) -> f64 {
    if ratio >= 1.0 - BOUND_SLACK {
        1.0
    } else {
        ratio
    }
}

/// Largest `p` the construction guarantees, `min(1, G_{k+1}(ψ₁)/(R_k(ψ₂)[1 − G_{k+1}(ψ₁)]))`.
pub fn max_conversion_probability(source: &PureState, target: &PureState, level: CoherenceLevel) -> Result<f64> {
    let (_, _, ratio) = maps::conversion_ratio(source, target, level)?;
    Ok(clamp_ratio(ratio))
}

/// Measures, bound and verdict, without building a map.
pub fn conversion_report(source: &PureState, target: &PureState, level: CoherenceLevel) -> Result<ConversionReport> {
    let (g_source, r_target, ratio) = maps::conversion_ratio(source, target, level)?;
    let p_max = clamp_ratio(ratio);
    Ok(ConversionReport {
        source: source.clone(),
        target: target.clone(),
        level,
        g_source,
        r_target,
        ratio,
        p_max,
        deterministic_feasible: p_max == 1.0,
        map: None,
    })
}

/// Largest entry of `|Λ(ψ₁) − p·ψ₂|`.
pub fn conversion_error(map: &KCoherencePreservingMap) -> f64 {
    let out = map.apply(&DensityOperator::from_pure(&map.source));
    let expected = map.target.projector().scale(map.scale());
    linalg::max_abs_diff(out.matrix(), &expected)
}

/// Builds the map at scale `p` and checks that it converts exactly.
pub fn report_with_map(
    source: &PureState,
    target: &PureState,
    level: CoherenceLevel,
    p: f64,
    budget: &OracleBudget,
) -> Result<ConversionReport> {
    let mut report = conversion_report(source, target, level)?;
    let map = build_k_preserving(source, target, level, p, budget)?;
    let err = conversion_error(&map);
    if err > CONVERSION_TOL {
        return Err(Error::ConversionCheckFailed(err));
    }
    report.map = Some(map);
    Ok(report)
}

/// Deterministic-conversion verdict; when feasible the report carries the
/// verified `p = 1` map.
pub fn deterministic_feasible(
    source: &PureState,
    target: &PureState,
    level: CoherenceLevel,
    budget: &OracleBudget,
) -> Result<ConversionReport> {
    let report = conversion_report(source, target, level)?;
    if !report.deterministic_feasible {
        return Ok(report);
    }
    report_with_map(source, target, level, 1.0, budget)
}

#[derive(Debug, Clone, PartialEq)]
pub struct NonIsolationWitness {
    pub source: PureState,
    /// `G_{k+1}(source)`.
    pub g_source: f64,
    /// `1 − 1/(R_k(target) + 1)`.
    pub threshold: f64,
    pub map: KCoherencePreservingMap,
}

fn projector_distance(a: &PureState, b: &PureState) -> f64 {
    linalg::frobenius(&(a.projector() - b.projector()))
}

fn random_phases<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Vec<f64> {
    (0..d).map(|_| 2.0 * PI * rng.gen::<f64>()).collect()
}

/// Finds a resource state `φ ≠ ψ` with `G_{k+1}(φ) ≥ 1 − 1/(R_k(ψ)+1)` and the
/// `p = 1` map sending `φ` to `ψ`.
///
/// The maximally coherent state always satisfies the threshold. The search
/// perturbs its moduli with shrinking spread and randomizes phases. When no
/// perturbation qualifies (for instance when `ψ` itself is maximally coherent,
/// where the threshold is tight) only the phases are randomized, which leaves
/// `G_{k+1}` unchanged.
pub fn nonisolation_witness(
    target: &PureState,
    level: CoherenceLevel,
    budget: &OracleBudget,
    rng_seed: u64,
) -> Result<NonIsolationWitness> {
    const ATTEMPTS: usize = 64;
    let d = target.dim();
    let k = level.require(2, d)?.k();
    maps::require_resource(target, level, crate::error::Role::Target)?;
    let next = level.next(d)?;
    let r = robustness_k(target, level)?.value;
    let threshold = 1.0 - 1.0 / (r + 1.0);
    let uniform = PureState::maximally_coherent(d)?;
    let mut rng = rng_from_seed(rng_seed);
    let amp = 1.0 / libm::sqrt(d as f64);

    let qualifies = |phi: &PureState, strict: bool| -> Result<bool> {
        let g = geometric_k(phi, next)?.value;
        let far_from_target = projector_distance(phi, target) > DISTINCT_TOL;
        let far_from_uniform = projector_distance(phi, &uniform) > DISTINCT_TOL;
        Ok(phi.rank() > k && g >= threshold - BOUND_SLACK && far_from_target && (far_from_uniform || !strict))
    };

    let mut found = None;
    for attempt in 0..ATTEMPTS {
        let spread = 0.5 * libm::pow(0.8, attempt as f64);
        let phases = random_phases(&mut rng, d);
        let coeffs = phases
            .iter()
            .map(|&t| {
                let m = (amp + spread * standard_normal(&mut rng)).abs();
                C64::new(m * libm::cos(t), m * libm::sin(t))
            })
            .collect();
        let phi = PureState::normalized(coeffs)?;
        if qualifies(&phi, true)? {
            found = Some(phi);
            break;
        }
    }
    if found.is_none() {
        for _ in 0..ATTEMPTS {
            let phi = uniform.with_phases(&random_phases(&mut rng, d))?;
            if qualifies(&phi, false)? {
                found = Some(phi);
                break;
            }
        }
    }
    let source = match found {
        Some(phi) => phi,
        None => uniform,
    };
    let g_source = geometric_k(&source, next)?.value;
    let map = build_k_preserving(&source, target, level, 1.0, budget)?;
    Ok(NonIsolationWitness {
        source,
        g_source,
        threshold,
        map,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum CorollaryFailureKind {
    Infeasible { ratio: f64 },
    ConversionError(f64),
    Build(Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorollaryFailure {
    pub trial: usize,
    pub target: PureState,
    pub kind: CorollaryFailureKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorollaryReport {
    pub trials: usize,
    pub failures: Vec<CorollaryFailure>,
}

impl CorollaryReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Checks that the maximally coherent state converts deterministically and
/// exactly into `trials` random resource targets.
pub fn corollary_check(
    dim: usize,
    level: CoherenceLevel,
    trials: usize,
    rng_seed: u64,
    budget: &OracleBudget,
) -> Result<CorollaryReport> {
    let k = level.k();
    if k < 2 || k >= dim {
        return Err(Error::LevelOutOfRange {
            k,
            min: 2,
            max: dim.saturating_sub(1),
        });
    }
    let source = PureState::maximally_coherent(dim)?;
    let mut failures = Vec::new();
    for trial in 0..trials {
        let target = sample_pure(dim, derive_seed(rng_seed, trial as u64), Some(k + 1))?;
        let kind = match deterministic_feasible(&source, &target, level, budget) {
            Ok(report) if !report.deterministic_feasible => {
                Some(CorollaryFailureKind::Infeasible { ratio: report.ratio })
            }
            Ok(report) => {
                let map = report.map.as_ref().expect("feasible reports carry a map");
                let err = conversion_error(map);
                (err > CONVERSION_TOL).then_some(CorollaryFailureKind::ConversionError(err))
            }
            Err(e) => Some(CorollaryFailureKind::Build(e)),
        };
        if let Some(kind) = kind {
            failures.push(CorollaryFailure { trial, target, kind });
        }
    }
    Ok(CorollaryReport { trials, failures })
}
