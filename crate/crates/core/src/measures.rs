//! Multilevel coherence measures of pure states.
//!
//! Both closed forms work on the sorted coefficient moduli `ν_1 ≥ … ≥ ν_d`,
//! so callers may pass arbitrary complex states: diagonal unitaries and basis
//! permutations leave the measures unchanged.

use alloc::vec::Vec;

use crate::error::Result;
use crate::linalg::{Subsets, C64};
use crate::oracles::{self, OracleBudget};
use crate::statespace::{CoherenceLevel, DensityOperator, PureState};

/// Robustness of `k`-coherence of a pure state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobustnessResult {
    pub value: f64,
    /// Index `l ∈ {1, …, k}` selected by the threshold search.
    pub l_star: usize,
    /// `s_l = Σ_{i ≥ l} ν_i`.
    pub tail_sum: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometricResult {
    pub value: f64,
}

/// Numerical robustness value: a certified upper bound together with a dual
/// lower bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobustnessBound {
    /// Feasible `s`: `(ρ + sδ)/(1+s) ∈ I_k` for an explicitly certified `δ ∈ I_k`.
    pub value: f64,
    pub lower_bound: f64,
    /// `value − lower_bound` fell below the budget's gap target.
    pub converged: bool,
}

/// Suffix sums `t[i] = Σ_{j ≥ i} x_j`, accumulated from the small end.
fn suffix_sums(x: &[f64]) -> Vec<f64> {
    let mut out = alloc::vec![0.0; x.len() + 1];
    for i in (0..x.len()).rev() {
        out[i] = out[i + 1] + x[i];
    }
    out
}

/// Closed-form robustness `R_k(|ψ⟩⟨ψ|)` for `2 ≤ k ≤ d`.
///
/// With `s_l = Σ_{i=l}^d ν_i`, `l` is the largest integer in `{2, …, k}` such
/// that `ν_{l−1} ≥ s_l/(k−l+1)` (or `1` if there is none), and
/// `R_k = s_l²/(k−l+1) − Σ_{i=l}^d ν_i²`.
pub fn robustness_k(state: &PureState, level: CoherenceLevel) -> Result<RobustnessResult> {
    let d = state.dim();
    let k = level.require(2, d)?.k();
    let nu = state.sorted_magnitudes();
    let squares: Vec<f64> = nu.iter().map(|x| x * x).collect();
    let tails = suffix_sums(&nu);
    let tail_squares = suffix_sums(&squares);

    // 1-based l maps to 0-based index l - 1.
    let l_star = (2..=k)
        .rev()
        .find(|&l| nu[l - 2] >= tails[l - 1] / (k - l + 1) as f64)
        .unwrap_or(1);
    let tail_sum = tails[l_star - 1];
    let raw = tail_sum * tail_sum / (k - l_star + 1) as f64 - tail_squares[l_star - 1];
    let value = if state.rank() <= k { 0.0 } else { raw.max(0.0) };
    Ok(RobustnessResult {
        value,
        l_star,
        tail_sum,
    })
}

/// Closed-form geometric measure `G_k = 1 − Σ_{i=1}^{k−1} |μ_i↓|²` for `2 ≤ k ≤ d`.
pub fn geometric_k(state: &PureState, level: CoherenceLevel) -> Result<GeometricResult> {
    let d = state.dim();
    let k = level.require(2, d)?.k();
    if state.rank() < k {
        return Ok(GeometricResult { value: 0.0 });
    }
    let mu = state.sorted_magnitudes();
    let head: f64 = mu[..k - 1].iter().map(|x| x * x).sum();
    Ok(GeometricResult {
        value: (1.0 - head).max(0.0),
    })
}

/// Geometric measure from its definition: `1 − max |⟨φ|ψ⟩|²` over pure
/// `|φ⟩` of coherence rank at most `k−1`.
///
/// Enumerates every `(k−1)`-subset of basis indices. On a fixed support the
/// best `φ` is the renormalized restriction of `ψ`, so the maximum is exact.
pub fn geometric_k_oracle(state: &PureState, level: CoherenceLevel) -> Result<f64> {
    let d = state.dim();
    let k = level.require(2, d)?.k();
    let psi = state.coeffs();
    let mut best = 0.0f64;
    for support in Subsets::new(d, k - 1) {
        let mut phi: Vec<C64> = alloc::vec![C64::new(0.0, 0.0); d];
        for &i in &support {
            phi[i] = psi[i];
        }
        let Ok(phi) = PureState::normalized(phi) else {
            continue;
        };
        best = best.max(phi.inner(state).norm_sqr());
    }
    Ok((1.0 - best).max(0.0))
}

/// Robustness from its definition `min { s ≥ 0 : (ρ + sδ)/(1+s) ∈ I_k, δ ∈ I_k }`,
/// solved numerically without reference to the closed form.
pub fn robustness_k_oracle(
    state: &DensityOperator,
    level: CoherenceLevel,
    budget: &OracleBudget,
) -> Result<RobustnessBound> {
    let search = oracles::robustness_search(state, level, budget)?;
    Ok(RobustnessBound {
        value: search.upper,
        lower_bound: search.lower,
        converged: search.converged,
    })
}
