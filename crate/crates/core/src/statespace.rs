//! Pure states, density operators and coherence levels in the fixed basis
//! `{|0⟩, …, |d−1⟩}`.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, CVector, C64};

/// Allowed deviation of `Σ|c_i|²` from 1.
pub const NORM_TOL: f64 = 1e-12;
/// Default cut below which a coefficient counts as zero for the coherence rank.
pub const DEFAULT_ZERO_TOL: f64 = 1e-12;
/// Largest accepted zero tolerance.
pub const MAX_ZERO_TOL: f64 = 1e-6;
/// Tolerance for Hermiticity, positivity and trace of density operators.
pub const OPERATOR_TOL: f64 = 1e-10;

/// Normalized pure state `|ψ⟩ = Σ c_i |i⟩`, `d ≥ 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    coeffs: CVector,
}

impl PureState {
    /// Validates: `d ≥ 2`, finite coefficients, not all zero, unit norm within [`NORM_TOL`].
    pub fn new(coeffs: Vec<C64>) -> Result<Self> {
        let coeffs = Self::checked(coeffs)?;
        let norm_sqr: f64 = coeffs.iter().map(|z| z.norm_sqr()).sum();
        if norm_sqr == 0.0 {
            return Err(Error::InvalidState("all coefficients are zero"));
        }
        let norm = libm::sqrt(norm_sqr);
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized { norm, tol: NORM_TOL });
        }
        Ok(Self { coeffs })
    }

    /// Rescales the coefficients to unit norm.
    pub fn normalized(coeffs: Vec<C64>) -> Result<Self> {
        let mut coeffs = Self::checked(coeffs)?;
        let norm = libm::sqrt(coeffs.iter().map(|z| z.norm_sqr()).sum());
        if norm == 0.0 {
            return Err(Error::InvalidState("all coefficients are zero"));
        }
        coeffs.unscale_mut(norm);
        Ok(Self { coeffs })
    }

    pub fn from_real(coeffs: &[f64]) -> Result<Self> {
        Self::new(coeffs.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        if index >= dim {
            return Err(Error::InvalidState("basis index out of range"));
        }
        let mut coeffs = alloc::vec![C64::new(0.0, 0.0); dim];
        coeffs[index] = C64::new(1.0, 0.0);
        Self::new(coeffs)
    }

    /// `(1/√d) Σ |i⟩`.
    pub fn maximally_coherent(dim: usize) -> Result<Self> {
        let amp = 1.0 / libm::sqrt(dim as f64);
        Self::normalized(alloc::vec![C64::new(amp, 0.0); dim])
    }

    fn checked(coeffs: Vec<C64>) -> Result<CVector> {
        if coeffs.len() < 2 {
            return Err(Error::DimensionTooSmall(coeffs.len()));
        }
        if coeffs.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidState("non-finite coefficient"));
        }
        Ok(CVector::from_vec(coeffs))
    }

    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &CVector {
        &self.coeffs
    }

    /// Number of coefficients with `|c_i| > zero_tol`.
    pub fn coherence_rank(&self, zero_tol: f64) -> Result<usize> {
        if !(0.0..=MAX_ZERO_TOL).contains(&zero_tol) {
            return Err(Error::InvalidTolerance(zero_tol));
        }
        let rank = self.coeffs.iter().filter(|&&z| linalg::modulus(z) > zero_tol).count();
        if rank == 0 {
            return Err(Error::InvalidState("all coefficients are zero"));
        }
        Ok(rank)
    }

    /// Coherence rank at [`DEFAULT_ZERO_TOL`].
    pub fn rank(&self) -> usize {
        self.coherence_rank(DEFAULT_ZERO_TOL)
            .expect("valid states have a nonzero coefficient")
    }

    /// `|c_i|` sorted descending.
    pub fn sorted_magnitudes(&self) -> Vec<f64> {
        let mut mags: Vec<f64> = self.coeffs.iter().map(|&z| linalg::modulus(z)).collect();
        mags.sort_by(|a, b| b.total_cmp(a));
        mags
    }

    /// `|ψ⟩⟨ψ|` as a raw matrix.
    pub fn projector(&self) -> CMatrix {
        linalg::outer(&self.coeffs)
    }

    pub fn inner(&self, other: &PureState) -> C64 {
        self.coeffs.dotc(&other.coeffs)
    }

    /// Coefficients permuted so that entry `i` of the result is `c_{perm[i]}`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.dim() {
            return Err(Error::DimensionMismatch(perm.len(), self.dim()));
        }
        let mut seen = alloc::vec![false; perm.len()];
        for &p in perm {
            if p >= perm.len() || core::mem::replace(&mut seen[p], true) {
                return Err(Error::InvalidState("not a permutation"));
            }
        }
        Ok(Self {
            coeffs: CVector::from_fn(self.dim(), |i, _| self.coeffs[perm[i]]),
        })
    }

    /// Applies the diagonal unitary `diag(e^{iθ_j})`.
    pub fn with_phases(&self, phases: &[f64]) -> Result<Self> {
        if phases.len() != self.dim() {
            return Err(Error::DimensionMismatch(phases.len(), self.dim()));
        }
        Ok(Self {
            coeffs: CVector::from_fn(self.dim(), |i, _| {
                self.coeffs[i] * C64::new(libm::cos(phases[i]), libm::sin(phases[i]))
            }),
        })
    }
}

/// A level `k ∈ {1, …, d}` of the hierarchy `I_1 ⊂ … ⊂ I_d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CoherenceLevel {
    k: usize,
}

impl CoherenceLevel {
    pub fn new(k: usize, dim: usize) -> Result<Self> {
        if k == 0 || k > dim {
            return Err(Error::LevelOutOfRange { k, min: 1, max: dim });
        }
        Ok(Self { k })
    }

    pub fn k(self) -> usize {
        self.k
    }

    /// Rejects levels outside `[min, max]`.
    pub(crate) fn require(self, min: usize, max: usize) -> Result<Self> {
        if self.k < min || self.k > max {
            return Err(Error::LevelOutOfRange { k: self.k, min, max });
        }
        Ok(self)
    }

    /// `k + 1`, if it fits in dimension `dim`.
    pub fn next(self, dim: usize) -> Result<Self> {
        Self::new(self.k + 1, dim)
    }
}

/// Hermitian PSD matrix with `0 < Tr ≤ 1`. Sub-normalized operators arise as
/// outputs of trace-non-increasing maps.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    matrix: CMatrix,
}

impl DensityOperator {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::InvalidOperator("matrix is not square"));
        }
        if matrix.nrows() < 2 {
            return Err(Error::DimensionTooSmall(matrix.nrows()));
        }
        if matrix.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidOperator("non-finite entry"));
        }
        let defect = linalg::hermitian_defect(&matrix);
        if defect > OPERATOR_TOL {
            return Err(Error::NotHermitian(defect));
        }
        let mut matrix = matrix;
        linalg::symmetrize(&mut matrix);
        let min_eig = linalg::min_eigenvalue(&matrix);
        if min_eig < -OPERATOR_TOL {
            return Err(Error::NotPositive(min_eig));
        }
        let tr = linalg::trace(&matrix).re;
        if tr <= 0.0 || tr > 1.0 + OPERATOR_TOL {
            return Err(Error::InvalidTrace(tr));
        }
        Ok(Self { matrix })
    }

    /// Skips validation for matrices that are density operators by construction.
    pub(crate) fn from_matrix_unchecked(mut matrix: CMatrix) -> Self {
        linalg::symmetrize(&mut matrix);
        Self { matrix }
    }

    pub fn from_pure(state: &PureState) -> Self {
        Self::from_matrix_unchecked(state.projector())
    }

    pub fn diagonal(probs: &[f64]) -> Result<Self> {
        let n = probs.len();
        Self::new(CMatrix::from_fn(n, n, |i, j| {
            if i == j {
                C64::new(probs[i], 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        }))
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn trace(&self) -> f64 {
        linalg::trace(&self.matrix).re
    }

    /// `ρ / Tr ρ`.
    pub fn normalized(&self) -> Self {
        Self::from_matrix_unchecked(self.matrix.unscale(self.trace()))
    }

    pub fn is_normalized(&self) -> bool {
        (self.trace() - 1.0).abs() <= OPERATOR_TOL
    }
}

/// Coherence rank of `state` with an explicit zero cut.
pub fn coherence_rank(state: &PureState, zero_tol: f64) -> Result<usize> {
    state.coherence_rank(zero_tol)
}

/// `|ψ⟩ ∈ I_k` iff its coherence rank is at most `k`.
pub fn pure_in_ik(state: &PureState, level: CoherenceLevel) -> bool {
    state.rank() <= level.k()
}

pub fn sorted_coeff_magnitudes(state: &PureState) -> Vec<f64> {
    state.sorted_magnitudes()
}

pub fn outer_product(state: &PureState) -> DensityOperator {
    DensityOperator::from_pure(state)
}
