//! Numerical machinery that is independent of the closed-form measures:
//! `I_k` membership certificates, the optimal free state `δ` of the
//! robustness problem, and seeded sampling.
//!
//! Negative answers are never proofs. A failed certification only means the
//! solver did not find a decomposition within its budget.

mod certificate;
mod factor_width;
pub mod sampling;

use alloc::vec::Vec;

pub use certificate::{
    CertificateComponent, CertificateDefect, IkCertificate, COMPONENT_ZERO_TOL, DEFAULT_CERT_TOL, WEIGHT_SUM_TOL,
};
pub use sampling::sample_pure;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, CVector, C64};
use crate::statespace::{CoherenceLevel, DensityOperator, PureState, OPERATOR_TOL};
use factor_width::Layout;

/// Iteration limits, restart count, seed and target accuracy of an oracle run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleBudget {
    /// ADMM iterations per restart.
    pub max_iterations: usize,
    pub restarts: usize,
    pub seed: u64,
    /// Certificate residual for membership; duality gap for robustness.
    pub tolerance: f64,
}

impl Default for OracleBudget {
    fn default() -> Self {
        Self {
            max_iterations: 2000,
            restarts: 20,
            seed: 0,
            tolerance: 1e-7,
        }
    }
}

impl OracleBudget {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::InvalidBudget("max_iterations must be at least 1"));
        }
        if self.restarts == 0 {
            return Err(Error::InvalidBudget("restarts must be at least 1"));
        }
        if self.tolerance <= 0.0 || !self.tolerance.is_finite() {
            return Err(Error::InvalidBudget("tolerance must be positive"));
        }
        Ok(())
    }

    /// Same budget with `factor` times the iterations per restart.
    pub fn scaled(&self, factor: usize) -> Self {
        Self {
            max_iterations: self.max_iterations * factor,
            ..*self
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..*self }
    }
}

/// Outcome of a membership query.
#[derive(Debug, Clone, PartialEq)]
pub enum Membership {
    Certified(IkCertificate),
    /// No decomposition within budget. Says nothing about non-membership.
    Inconclusive {
        best_residual: f64,
    },
}

impl Membership {
    pub fn certificate(&self) -> Option<&IkCertificate> {
        match self {
            Membership::Certified(c) => Some(c),
            Membership::Inconclusive { .. } => None,
        }
    }

    pub fn is_certified(&self) -> bool {
        matches!(self, Membership::Certified(_))
    }
}

fn unit(dim: usize, i: usize) -> CVector {
    let mut v = CVector::zeros(dim);
    v[i] = C64::new(1.0, 0.0);
    v
}

/// Eigen-decomposition parts of `op`, if every eigenvector with positive
/// weight already has coherence rank at most `k`.
fn eigen_parts(op: &CMatrix, k: usize) -> Option<Vec<(f64, CVector)>> {
    let (vals, vecs) = linalg::hermitian_eigen(op);
    let mut parts = Vec::new();
    for (c, &lam) in vals.iter().enumerate() {
        if lam <= OPERATOR_TOL * 1e-2 {
            continue;
        }
        let v: CVector = vecs.column(c).into_owned();
        let rank = v.iter().filter(|z| linalg::modulus(**z) > COMPONENT_ZERO_TOL).count();
        if rank > k {
            return None;
        }
        parts.push((lam, v));
    }
    Some(parts)
}

/// Searches for an explicit decomposition of `op` into pure states of
/// coherence rank at most `k`.
///
/// Diagonal operators, operators whose eigenvectors already qualify and the
/// case `k = d` are handled directly. Otherwise the block program is solved
/// by ADMM; see `factor_width`.
pub fn certify_in_ik(op: &DensityOperator, level: CoherenceLevel, budget: &OracleBudget) -> Result<Membership> {
    budget.validate()?;
    let d = op.dim();
    let k = level.require(1, d)?.k();
    let m = op.matrix();
    let accept = |parts: Vec<(f64, CVector)>| {
        let cert = IkCertificate::from_parts(level, parts, m);
        if cert.residual <= budget.tolerance {
            Membership::Certified(cert)
        } else {
            Membership::Inconclusive {
                best_residual: cert.residual,
            }
        }
    };

    let off_diagonal = (0..d)
        .flat_map(|i| (0..d).filter(move |&j| j != i).map(move |j| (i, j)))
        .map(|(i, j)| m[(i, j)].norm_sqr())
        .sum::<f64>();
    if off_diagonal == 0.0 || k == 1 {
        let parts = (0..d)
            .filter(|&i| m[(i, i)].re > 0.0)
            .map(|i| (m[(i, i)].re, unit(d, i)))
            .collect();
        return Ok(accept(parts));
    }
    if let Some(parts) = eigen_parts(m, k) {
        let cert = IkCertificate::from_parts(level, parts, m);
        if cert.residual <= budget.tolerance {
            return Ok(Membership::Certified(cert));
        }
    }
    let layout = Layout::new(d, k);
    Ok(accept(factor_width::solve_decomposition(&layout, m, budget)))
}

/// Result of the numerical robustness program for one operator.
#[derive(Debug, Clone, PartialEq)]
pub struct RobustnessSearch {
    /// Certified feasible `s`.
    pub upper: f64,
    /// Dual lower bound on the minimum.
    pub lower: f64,
    pub converged: bool,
    /// `δ ∈ I_k` with `Tr δ = 1` and its certificate.
    pub delta: DensityOperator,
    pub delta_certificate: IkCertificate,
    /// Certificate of `(ρ + upper·δ)/(1 + upper)`.
    pub mix_certificate: IkCertificate,
}

/// Solves `min { s : (ρ + sδ)/(1+s) ∈ I_k, δ ∈ I_k }` for normalized `ρ`, `2 ≤ k ≤ d`.
pub fn robustness_search(
    state: &DensityOperator,
    level: CoherenceLevel,
    budget: &OracleBudget,
) -> Result<RobustnessSearch> {
    budget.validate()?;
    let d = state.dim();
    let k = level.require(2, d)?.k();
    if !state.is_normalized() {
        return Err(Error::InvalidTrace(state.trace()));
    }
    let rho = state.matrix();
    let layout = Layout::new(d, k);
    let raw = factor_width::solve_robustness(&layout, rho, budget);

    let (delta_parts, s) = if raw.upper > 0.0 {
        let s = raw.upper;
        let parts = raw.delta_parts.into_iter().map(|(w, v)| (w / s, v)).collect();
        (parts, s)
    } else {
        let parts = (0..d).map(|i| (1.0 / d as f64, unit(d, i))).collect();
        (parts, 0.0)
    };
    // δ is defined by its certificate, so the certificate is exact.
    let probe = IkCertificate::from_parts(level, delta_parts, &CMatrix::zeros(d, d));
    let delta_matrix = probe.reconstruct(d);
    let delta_certificate = IkCertificate {
        residual: probe.distance_to(&delta_matrix),
        ..probe
    };
    let mix_target = (rho + delta_matrix.scale(s)).unscale(1.0 + s);
    let mix_certificate = IkCertificate::from_parts(level, raw.mix_parts, &mix_target.scale(1.0 + s))
        .scaled(1.0 / (1.0 + s), &mix_target);

    Ok(RobustnessSearch {
        upper: s,
        lower: raw.lower,
        converged: raw.converged,
        delta: DensityOperator::from_matrix_unchecked(delta_matrix),
        delta_certificate,
        mix_certificate,
    })
}

/// The free state `δ` attaining (numerically) the robustness of a resource state.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimalDelta {
    pub delta: DensityOperator,
    /// Feasible mixing weight; an upper bound on `R_k(target)`.
    pub s_value: f64,
    pub lower_bound: f64,
    pub converged: bool,
    pub delta_certificate: IkCertificate,
    /// Certificate of `(ψ + s·δ)/(1 + s)`.
    pub mix_certificate: IkCertificate,
}

/// Recovers `δ` for a pure resource state at level `2 ≤ k < d`.
pub fn optimal_delta(target: &PureState, level: CoherenceLevel, budget: &OracleBudget) -> Result<OptimalDelta> {
    let d = target.dim();
    let k = level.require(2, d.saturating_sub(1).max(2))?.k();
    if k >= d {
        return Err(Error::LevelOutOfRange { k, min: 2, max: d - 1 });
    }
    let rank = target.rank();
    if rank <= k {
        return Err(Error::NotResourceState {
            role: crate::error::Role::Target,
            rank,
            k,
        });
    }
    let search = robustness_search(&DensityOperator::from_pure(target), level, budget)?;
    Ok(interior_delta(target, level, search))
}

/// Weight of `I/d` mixed into `δ`.
///
/// With `δ' = (1−η)δ + η·I/d` and `s' = s/(1−η)`, `ψ + s'δ' = ψ + sδ + s'η·I/d`,
/// so `s'` stays feasible and every `ψ + tδ'` with `t ≥ s'` lies at least
/// `tη/d` inside `cone(I_k)`.
pub const DELTA_INTERIOR_WEIGHT: f64 = 1e-4;

fn interior_delta(target: &PureState, level: CoherenceLevel, search: RobustnessSearch) -> OptimalDelta {
    let d = target.dim();
    let eta = DELTA_INTERIOR_WEIGHT;
    let s = search.upper;
    let s_value = s / (1.0 - eta);
    let basis = |w: f64| (0..d).map(move |i| (w, unit(d, i)));

    let parts = search
        .delta_certificate
        .components
        .iter()
        .map(|c| (c.weight * (1.0 - eta), c.state.coeffs().clone()))
        .chain(basis(eta / d as f64))
        .collect();
    let probe = IkCertificate::from_parts(level, parts, &CMatrix::zeros(d, d));
    let delta_matrix = probe.reconstruct(d);
    let delta_certificate = IkCertificate {
        residual: probe.distance_to(&delta_matrix),
        ..probe
    };

    let mix_target = (target.projector() + delta_matrix.scale(s_value)).unscale(1.0 + s_value);
    let shrink = (1.0 + s) / (1.0 + s_value);
    let parts = search
        .mix_certificate
        .components
        .iter()
        .map(|c| (c.weight * shrink, c.state.coeffs().clone()))
        .chain(basis(s_value * eta / (d as f64 * (1.0 + s_value))))
        .collect();
    let mix_certificate = IkCertificate::from_parts(level, parts, &mix_target);

    OptimalDelta {
        delta: DensityOperator::from_matrix_unchecked(delta_matrix),
        s_value,
        lower_bound: search.lower,
        converged: search.converged,
        delta_certificate,
        mix_certificate,
    }
}
