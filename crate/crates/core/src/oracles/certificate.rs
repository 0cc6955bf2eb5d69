//! Explicit convex decompositions proving membership in `I_k`.

use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::linalg::{self, CMatrix, CVector, C64};
use crate::statespace::{CoherenceLevel, DensityOperator, PureState};

/// Rank cut used when checking that certificate components lie in `I_k`.
pub const COMPONENT_ZERO_TOL: f64 = 1e-9;
/// Residual below which a certificate is accepted.
pub const DEFAULT_CERT_TOL: f64 = 1e-7;
/// Allowed mismatch between total weight and the target trace.
pub const WEIGHT_SUM_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct CertificateComponent {
    pub weight: f64,
    pub state: PureState,
}

/// `Σ_i w_i |φ_i⟩⟨φ_i|` with every `|φ_i⟩` of coherence rank at most `k`,
/// plus its Frobenius distance to the certified operator.
#[derive(Debug, Clone, PartialEq)]
pub struct IkCertificate {
    pub level: CoherenceLevel,
    pub components: Vec<CertificateComponent>,
    pub residual: f64,
}

/// Reasons a certificate fails to certify a given operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CertificateDefect {
    NonPositiveWeight(f64),
    RankTooLarge { rank: usize, k: usize },
    WeightSum { total: f64, trace: f64 },
    Residual(f64),
    DimensionMismatch,
}

impl IkCertificate {
    /// Builds a certificate from weighted vectors, reducing to at most `d²`
    /// components and measuring the residual against `target`.
    pub(crate) fn from_parts(level: CoherenceLevel, parts: Vec<(f64, CVector)>, target: &CMatrix) -> Self {
        let dim = target.nrows();
        let parts = caratheodory_reduce(parts, dim);
        let components = parts
            .into_iter()
            .filter_map(|(w, v)| {
                let state = PureState::normalized(v.iter().copied().collect()).ok()?;
                Some(CertificateComponent { weight: w, state })
            })
            .collect();
        let mut cert = Self {
            level,
            components,
            residual: 0.0,
        };
        cert.residual = cert.distance_to(target);
        cert
    }

    pub fn dim(&self) -> usize {
        self.components.first().map_or(0, |c| c.state.dim())
    }

    pub fn total_weight(&self) -> f64 {
        self.components.iter().map(|c| c.weight).sum()
    }

    /// `Σ w_i |φ_i⟩⟨φ_i|`.
    pub fn reconstruct(&self, dim: usize) -> CMatrix {
        let mut m = CMatrix::zeros(dim, dim);
        for c in &self.components {
            let v = c.state.coeffs();
            for i in 0..dim {
                if v[i] == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..dim {
                    m[(i, j)] += v[i] * v[j].conj() * c.weight;
                }
            }
        }
        m
    }

    pub fn distance_to(&self, target: &CMatrix) -> f64 {
        linalg::frobenius(&(self.reconstruct(target.nrows()) - target))
    }

    /// Re-validates the certificate against `target` from scratch.
    pub fn check(&self, target: &DensityOperator, tol: f64) -> Result<(), CertificateDefect> {
        if self.components.iter().any(|c| c.state.dim() != target.dim()) {
            return Err(CertificateDefect::DimensionMismatch);
        }
        for c in &self.components {
            if c.weight <= 0.0 || c.weight.is_nan() {
                return Err(CertificateDefect::NonPositiveWeight(c.weight));
            }
            let rank = c.state.coherence_rank(COMPONENT_ZERO_TOL).expect("tolerance in range");
            if rank > self.level.k() {
                return Err(CertificateDefect::RankTooLarge {
                    rank,
                    k: self.level.k(),
                });
            }
        }
        let total = self.total_weight();
        let trace = target.trace();
        if (total - trace).abs() > WEIGHT_SUM_TOL {
            return Err(CertificateDefect::WeightSum { total, trace });
        }
        let residual = self.distance_to(target.matrix());
        if residual > tol {
            return Err(CertificateDefect::Residual(residual));
        }
        Ok(())
    }

    pub fn is_valid_for(&self, target: &DensityOperator, tol: f64) -> bool {
        self.check(target, tol).is_ok()
    }

    pub(crate) fn scaled(mut self, factor: f64, target: &CMatrix) -> Self {
        for c in &mut self.components {
            c.weight *= factor;
        }
        self.residual = self.distance_to(target);
        self
    }
}

/// Real coordinates of `|v⟩⟨v|` in the `d²`-dimensional space of Hermitian matrices.
fn hermitian_coords(v: &CVector) -> Vec<f64> {
    let d = v.len();
    let mut out = Vec::with_capacity(d * d);
    for i in 0..d {
        out.push(v[i].norm_sqr());
        for j in (i + 1)..d {
            let z = v[i] * v[j].conj();
            out.push(z.re);
            out.push(z.im);
        }
    }
    out
}

/// Carathéodory reduction: while more than `d²` rank-one terms remain, move
/// along a null-space direction of their coordinate matrix until a weight hits
/// zero. The weighted sum is unchanged up to roundoff.
pub(crate) fn caratheodory_reduce(mut parts: Vec<(f64, CVector)>, dim: usize) -> Vec<(f64, CVector)> {
    const DROP: f64 = 1e-300;
    parts.retain(|(w, _)| *w > DROP);
    let cap = dim * dim;
    while parts.len() > cap {
        let n = cap + 1;
        // Padding with a zero row makes the matrix square, so the full SVD
        // exposes the null direction without squaring the condition number.
        let columns: Vec<Vec<f64>> = parts[..n].iter().map(|(_, v)| hermitian_coords(v)).collect();
        let coords = DMatrix::from_fn(n, n, |r, c| if r < cap { columns[c][r] } else { 0.0 });
        let svd = coords.svd(false, true);
        let v_t = svd.v_t.expect("requested");
        let (imin, _) = svd
            .singular_values
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("non-empty");
        let mut alpha: Vec<f64> = v_t.row(imin).iter().copied().collect();
        if alpha.iter().all(|&a| a <= 0.0) {
            alpha.iter_mut().for_each(|a| *a = -*a);
        }
        let (pivot, t) = alpha
            .iter()
            .enumerate()
            .filter(|(_, &a)| a > 0.0)
            .map(|(i, &a)| (i, parts[i].0 / a))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("null vector has a positive entry");
        for (i, a) in alpha.iter().enumerate() {
            parts[i].0 -= t * a;
        }
        parts[pivot].0 = 0.0;
        parts.retain(|(w, _)| *w > DROP);
    }
    parts
}
