//! Two-outcome maps `Λ(σ) = p·Tr(Aσ)·ρ₁ + Tr((I−A)σ)·ρ₂` and the
//! `k`-coherence-preserving specialisation `A = ψ₁`, `ρ₁ = ψ₂`, `ρ₂ = δ`.
//!
//! Maps are kept in this affine form. With `0 ≤ A ≤ I` and `p = 1` the map
//! is CPTP; for `p < 1` it is trace non-increasing:
//! `Tr Λ(σ) = Tr σ − (1−p)·Tr(Aσ)`.

use alloc::vec::Vec;

use crate::error::{Error, Result, Role};
use crate::linalg::{self, CMatrix};
use crate::measures::{geometric_k, robustness_k};
use crate::oracles::sampling::{random_ik_member, rng_from_seed};
use crate::oracles::{certify_in_ik, optimal_delta, Membership, OptimalDelta, OracleBudget};
use crate::statespace::{CoherenceLevel, DensityOperator, PureState, OPERATOR_TOL};

/// Slack on the conversion bound `p ≤ G/(R(1−G))`.
pub const BOUND_SLACK: f64 = 1e-12;
/// Allowed gap between the oracle's `s` and the closed-form robustness.
pub const DELTA_CONSISTENCY_TOL: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct TwoOutcomeMap {
    effect: CMatrix,
    out1: DensityOperator,
    out2: DensityOperator,
    scale: f64,
}

pub fn build_two_outcome(
    effect: CMatrix,
    out1: DensityOperator,
    out2: DensityOperator,
    p: f64,
) -> Result<TwoOutcomeMap> {
    TwoOutcomeMap::new(effect, out1, out2, p)
}

impl TwoOutcomeMap {
    pub fn new(effect: CMatrix, out1: DensityOperator, out2: DensityOperator, p: f64) -> Result<Self> {
        let d = out1.dim();
        if out2.dim() != d {
            return Err(Error::DimensionMismatch(d, out2.dim()));
        }
        if effect.nrows() != d || effect.ncols() != d {
            return Err(Error::DimensionMismatch(effect.nrows(), d));
        }
        let defect = linalg::hermitian_defect(&effect);
        if defect > OPERATOR_TOL {
            return Err(Error::NotHermitian(defect));
        }
        let mut effect = effect;
        linalg::symmetrize(&mut effect);
        let (vals, _) = linalg::hermitian_eigen(&effect);
        if let Some(&bad) = vals
            .iter()
            .find(|&&l| !(-OPERATOR_TOL..=1.0 + OPERATOR_TOL).contains(&l))
        {
            return Err(Error::InvalidEffect(bad));
        }
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::InvalidScale(p));
        }
        for out in [&out1, &out2] {
            if !out.is_normalized() {
                return Err(Error::InvalidTrace(out.trace()));
            }
        }
        Ok(Self {
            effect,
            out1,
            out2,
            scale: p,
        })
    }

    pub fn effect(&self) -> &CMatrix {
        &self.effect
    }

    pub fn out1(&self) -> &DensityOperator {
        &self.out1
    }

    pub fn out2(&self) -> &DensityOperator {
        &self.out2
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn dim(&self) -> usize {
        self.out1.dim()
    }

    /// Linear action on an arbitrary square matrix.
    pub fn apply_matrix(&self, sigma: &CMatrix) -> CMatrix {
        let hit = linalg::trace_product(&self.effect, sigma).re;
        let miss = linalg::trace(sigma).re - hit;
        self.out1.matrix().scale(self.scale * hit) + self.out2.matrix().scale(miss)
    }

    pub fn apply(&self, sigma: &DensityOperator) -> DensityOperator {
        DensityOperator::from_matrix_unchecked(self.apply_matrix(sigma.matrix()))
    }

    /// `Tr(Aσ)`.
    pub fn effect_weight(&self, sigma: &DensityOperator) -> f64 {
        linalg::trace_product(&self.effect, sigma.matrix()).re
    }
}

pub fn apply(map: &TwoOutcomeMap, input: &DensityOperator) -> DensityOperator {
    map.apply(input)
}

/// `σ ↦ p·Tr(ψ₁σ)·ψ₂ + Tr((I−ψ₁)σ)·δ` with `δ` the optimal robustness state of `ψ₂`.
#[derive(Debug, Clone, PartialEq)]
pub struct KCoherencePreservingMap {
    pub base: TwoOutcomeMap,
    pub level: CoherenceLevel,
    pub delta: OptimalDelta,
    pub source: PureState,
    pub target: PureState,
    /// `G_{k+1}(ψ₁)` of the source.
    pub g_source: f64,
    /// `R_k(ψ₂)` of the target, closed form.
    pub r_target: f64,
    /// `G_{k+1}(ψ₁) / (R_k(ψ₂)·[1 − G_{k+1}(ψ₁)])`.
    pub bound: f64,
}

impl KCoherencePreservingMap {
    pub fn apply(&self, sigma: &DensityOperator) -> DensityOperator {
        self.base.apply(sigma)
    }

    pub fn scale(&self) -> f64 {
        self.base.scale()
    }
}

pub(crate) fn require_resource(state: &PureState, level: CoherenceLevel, role: Role) -> Result<()> {
    let rank = state.rank();
    if rank <= level.k() {
        return Err(Error::NotResourceState {
            role,
            rank,
            k: level.k(),
        });
    }
    Ok(())
}

/// `(G_{k+1}(source), R_k(target), ratio)`, both states resource states at level `k ≥ 2`.
pub(crate) fn conversion_ratio(
    source: &PureState,
    target: &PureState,
    level: CoherenceLevel,
) -> Result<(f64, f64, f64)> {
    if source.dim() != target.dim() {
        return Err(Error::DimensionMismatch(source.dim(), target.dim()));
    }
    let d = source.dim();
    level.require(2, d)?;
    require_resource(source, level, Role::Source)?;
    require_resource(target, level, Role::Target)?;
    let g = geometric_k(source, level.next(d)?)?.value;
    let r = robustness_k(target, level)?.value;
    Ok((g, r, g / (r * (1.0 - g))))
}

/// Builds the map sending `|source⟩⟨source|` to `p·|target⟩⟨target|`.
pub fn build_k_preserving(
    source: &PureState,
    target: &PureState,
    level: CoherenceLevel,
    p: f64,
    budget: &OracleBudget,
) -> Result<KCoherencePreservingMap> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::InvalidScale(p));
    }
    let (g_source, r_target, bound) = conversion_ratio(source, target, level)?;
    if p > bound + BOUND_SLACK {
        return Err(Error::BoundViolation { p, bound });
    }
    let delta = optimal_delta(target, level, budget)?;
    if (delta.s_value - r_target).abs() > DELTA_CONSISTENCY_TOL {
        return Err(Error::OracleNotConverged {
            s_value: delta.s_value,
            expected: r_target,
        });
    }
    let base = TwoOutcomeMap::new(
        source.projector(),
        DensityOperator::from_pure(target),
        delta.delta.clone(),
        p,
    )?;
    Ok(KCoherencePreservingMap {
        base,
        level,
        delta,
        source: source.clone(),
        target: target.clone(),
        g_source,
        r_target,
        bound,
    })
}

/// Per-input record of [`verify_preserves_ik`].
#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    /// `Tr(ψ₁σ)`.
    pub overlap: f64,
    /// `(1/p)(1/Tr(ψ₁σ) − 1)`; infinite when the overlap vanishes.
    pub scalar_value: f64,
    /// `scalar_value ≥ R_k(ψ₂)`.
    pub scalar_ok: bool,
    /// `Tr(ψ₁σ) ≤ 1 − G_{k+1}(ψ₁)`.
    pub overlap_ok: bool,
    /// `|Tr Λ(σ) − (Tr σ − (1−p)Tr(ψ₁σ))|`.
    pub trace_error: f64,
    pub membership: Membership,
}

impl TrialOutcome {
    pub fn passed(&self) -> bool {
        self.scalar_ok && self.overlap_ok && self.trace_error <= OPERATOR_TOL && self.membership.is_certified()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    pub trials: Vec<TrialOutcome>,
}

impl VerificationReport {
    pub fn scalar_passes(&self) -> usize {
        self.trials.iter().filter(|t| t.scalar_ok).count()
    }

    pub fn certified(&self) -> usize {
        self.trials.iter().filter(|t| t.membership.is_certified()).count()
    }

    pub fn all_passed(&self) -> bool {
        self.trials.iter().all(TrialOutcome::passed)
    }
}

/// Checks one input `σ ∈ I_k`: applies the map, renormalizes, and certifies the
/// output independently.
pub fn verify_on(
    map: &KCoherencePreservingMap,
    sigma: &DensityOperator,
    budget: &OracleBudget,
) -> Result<TrialOutcome> {
    let p = map.scale();
    let overlap = map.base.effect_weight(sigma);
    let scalar_value = if overlap > 0.0 {
        (1.0 / overlap - 1.0) / p
    } else {
        f64::INFINITY
    };
    let scalar_ok = scalar_value >= map.r_target * (1.0 - BOUND_SLACK) - BOUND_SLACK;
    let overlap_ok = overlap <= 1.0 - map.g_source + BOUND_SLACK;
    let out = map.apply(sigma);
    let expected_trace = sigma.trace() - (1.0 - p) * overlap;
    let trace_error = (out.trace() - expected_trace).abs();
    let membership = certify_in_ik(&out.normalized(), map.level, budget)?;
    Ok(TrialOutcome {
        overlap,
        scalar_value,
        scalar_ok,
        overlap_ok,
        trace_error,
        membership,
    })
}

/// Runs [`verify_on`] for `trials` random members of `I_k`.
pub fn verify_preserves_ik(
    map: &KCoherencePreservingMap,
    trials: usize,
    budget: &OracleBudget,
    rng_seed: u64,
) -> Result<VerificationReport> {
    let mut rng = rng_from_seed(rng_seed);
    let d = map.base.dim();
    let mut outcomes = Vec::with_capacity(trials);
    for _ in 0..trials {
        let (sigma, _) = random_ik_member(&mut rng, d, map.level);
        outcomes.push(verify_on(map, &sigma, budget)?);
    }
    Ok(VerificationReport { trials: outcomes })
}
