//! ADMM over the block form of `cone(I_k)`.
//!
//! A matrix is a nonnegative combination of rank-≤k pure projectors exactly
//! when it is a sum `Σ_S E_S(P_S)` of PSD `k × k` blocks `P_S`, one per
//! `k`-subset `S` of basis indices, embedded by `E_S`. Both oracle problems
//! are posed over these blocks:
//!
//! - decomposition: find `P` with `Σ E_S(P_S) = b`;
//! - robustness: minimise `Σ Tr Q_S` subject to `Σ E_S(P_S) − Σ E_S(Q_S) = ρ`.
//!
//! The affine step has a closed form because the constraint operator `A`
//! satisfies `(AA*)(M) = n · (N ∘ M)` with `N_ij = #{S ∋ i, j}`.

use alloc::vec::Vec;

use nalgebra::DMatrix;
use rand::Rng;

use super::sampling::{complex_normal, derive_seed, rng_from_seed};
use super::OracleBudget;
use crate::linalg::{self, CMatrix, CVector, Subsets, C64};

const CHECK_EVERY: usize = 20;
const RELAXATION: f64 = 1.6;

pub(crate) struct Layout {
    pub dim: usize,
    pub subsets: Vec<Vec<usize>>,
    counts: DMatrix<f64>,
}

impl Layout {
    /// Requires `2 ≤ k ≤ dim` so that every entry is covered by some block.
    pub fn new(dim: usize, k: usize) -> Self {
        debug_assert!(k >= 2 && k <= dim);
        let subsets: Vec<Vec<usize>> = Subsets::new(dim, k).collect();
        let mut counts = DMatrix::zeros(dim, dim);
        for s in &subsets {
            for &i in s {
                for &j in s {
                    counts[(i, j)] += 1.0;
                }
            }
        }
        Self { dim, subsets, counts }
    }

    /// Number of blocks containing any fixed index.
    fn diagonal_cover(&self) -> f64 {
        self.counts[(0, 0)]
    }

    fn block_size(&self) -> usize {
        self.subsets[0].len()
    }

    fn restrict(&self, m: &CMatrix, s: usize) -> CMatrix {
        let idx = &self.subsets[s];
        CMatrix::from_fn(idx.len(), idx.len(), |a, b| m[(idx[a], idx[b])])
    }

    fn embed_add(&self, acc: &mut CMatrix, block: &CMatrix, s: usize, factor: f64) {
        let idx = &self.subsets[s];
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate() {
                acc[(i, j)] += block[(a, b)] * factor;
            }
        }
    }

    fn embed_vector(&self, v: &CVector, s: usize) -> CVector {
        let mut out = CVector::zeros(self.dim);
        for (a, &i) in self.subsets[s].iter().enumerate() {
            out[i] = v[a];
        }
        out
    }

    fn sum(&self, blocks: &[CMatrix]) -> CMatrix {
        let mut acc = CMatrix::zeros(self.dim, self.dim);
        for (s, b) in blocks.iter().enumerate() {
            self.embed_add(&mut acc, b, s, 1.0);
        }
        acc
    }

    /// Rank-one parts `(λ, E_S v)` of every block.
    pub fn block_parts(&self, blocks: &[CMatrix], scale: f64) -> Vec<(f64, CVector)> {
        let mut parts = Vec::new();
        for (s, b) in blocks.iter().enumerate() {
            let (vals, vecs) = linalg::hermitian_eigen(b);
            for (c, &lam) in vals.iter().enumerate() {
                if lam > 0.0 {
                    parts.push((lam * scale, self.embed_vector(&vecs.column(c).into_owned(), s)));
                }
            }
        }
        parts
    }
}

fn project_psd(m: &CMatrix) -> CMatrix {
    let (vals, vecs) = linalg::hermitian_eigen(m);
    let n = m.nrows();
    let mut out = CMatrix::zeros(n, n);
    for (c, &lam) in vals.iter().enumerate() {
        if lam <= 0.0 {
            continue;
        }
        let v = vecs.column(c);
        for i in 0..n {
            let vi = v[i] * lam;
            for j in 0..n {
                out[(i, j)] += vi * v[j].conj();
            }
        }
    }
    out
}

/// Slack needed to make `m + cI` diagonally dominant.
pub(crate) fn dominance_gap(m: &CMatrix) -> f64 {
    let n = m.nrows();
    (0..n)
        .map(|i| {
            let off: f64 = (0..n).filter(|&j| j != i).map(|j| linalg::modulus(m[(i, j)])).sum();
            off - m[(i, i)].re
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Exact rank-≤2 decomposition of a Hermitian diagonally dominant matrix with
/// nonnegative diagonal: one `[[|m|, m], [m̄, |m|]]` block per off-diagonal pair
/// plus the leftover diagonal.
pub(crate) fn dominant_parts(m: &CMatrix, scale: f64) -> Vec<(f64, CVector)> {
    let n = m.nrows();
    let mut parts = Vec::new();
    let mut leftover: Vec<f64> = (0..n).map(|i| m[(i, i)].re).collect();
    let h = libm::sqrt(0.5);
    for i in 0..n {
        for j in (i + 1)..n {
            let z = m[(i, j)];
            let r = linalg::modulus(z);
            if r == 0.0 {
                continue;
            }
            leftover[i] -= r;
            leftover[j] -= r;
            let mut v = CVector::zeros(n);
            v[i] = C64::new(h, 0.0);
            v[j] = (z / r).conj() * h;
            parts.push((2.0 * r * scale, v));
        }
    }
    for (i, w) in leftover.into_iter().enumerate() {
        if w > 0.0 {
            let mut v = CVector::zeros(n);
            v[i] = C64::new(1.0, 0.0);
            parts.push((w * scale, v));
        }
    }
    parts
}

#[derive(Clone, Copy)]
struct Copy {
    sign: f64,
    cost: f64,
}

struct Iterate {
    z: Vec<Vec<CMatrix>>,
    u: Vec<Vec<CMatrix>>,
    /// Multiplier of the equality constraint.
    y: CMatrix,
}

struct Admm<'a> {
    layout: &'a Layout,
    copies: &'a [Copy],
    target: &'a CMatrix,
    penalty: f64,
}

impl Admm<'_> {
    fn start(&self, restart: usize, seed: u64) -> Iterate {
        let nb = self.layout.subsets.len();
        let k = self.layout.block_size();
        let zero = CMatrix::zeros(k, k);
        let z = if restart == 0 {
            alloc::vec![alloc::vec![zero.clone(); nb]; self.copies.len()]
        } else {
            let mut rng = rng_from_seed(derive_seed(seed, restart as u64));
            let scale = 1.0 / (nb * k) as f64;
            (0..self.copies.len())
                .map(|_| {
                    (0..nb)
                        .map(|_| {
                            let g = CMatrix::from_fn(k, k, |_, _| complex_normal(&mut rng));
                            (&g * g.adjoint()).scale(scale * rng.gen::<f64>())
                        })
                        .collect()
                })
                .collect()
        };
        Iterate {
            z,
            u: alloc::vec![alloc::vec![zero; nb]; self.copies.len()],
            y: CMatrix::zeros(self.layout.dim, self.layout.dim),
        }
    }

    fn step(&self, it: &mut Iterate) {
        let layout = self.layout;
        let k = layout.block_size();
        let n_copies = self.copies.len() as f64;
        let mut v: Vec<Vec<CMatrix>> = Vec::with_capacity(self.copies.len());
        let mut image = CMatrix::zeros(layout.dim, layout.dim);
        for (j, copy) in self.copies.iter().enumerate() {
            let mut row = Vec::with_capacity(layout.subsets.len());
            for s in 0..layout.subsets.len() {
                let mut b = &it.z[j][s] - &it.u[j][s];
                if copy.cost != 0.0 {
                    let shift = copy.cost / self.penalty;
                    for a in 0..k {
                        b[(a, a)] -= C64::new(shift, 0.0);
                    }
                }
                layout.embed_add(&mut image, &b, s, copy.sign);
                row.push(b);
            }
            v.push(row);
        }
        let mut w = self.target - image;
        for i in 0..layout.dim {
            for jj in 0..layout.dim {
                w[(i, jj)] /= n_copies * layout.counts[(i, jj)];
            }
        }
        it.y = w.scale(self.penalty);
        for (j, copy) in self.copies.iter().enumerate() {
            for (s, vs) in v[j].iter().enumerate() {
                let x = vs + layout.restrict(&w, s).scale(copy.sign);
                let relaxed = x.scale(RELAXATION) + it.z[j][s].scale(1.0 - RELAXATION);
                let znew = project_psd(&(&relaxed + &it.u[j][s]));
                it.u[j][s] += relaxed - &znew;
                it.z[j][s] = znew;
            }
        }
    }
}

fn penalty_for(restart: usize) -> f64 {
    let e = restart.div_ceil(2) as i32;
    let e = if restart % 2 == 1 { e } else { -e };
    libm::pow(2.0, e as f64)
}

/// Raw outcome of the robustness program.
pub(crate) struct RobustnessRaw {
    pub upper: f64,
    pub lower: f64,
    pub converged: bool,
    /// Parts of `Y = (ρ + Y) − ρ ∈ cone(I_k)`, with `Tr Y = upper`.
    pub delta_parts: Vec<(f64, CVector)>,
    /// Parts of `ρ + Y`.
    pub mix_parts: Vec<(f64, CVector)>,
}

/// Certified upper bound from a PSD iterate: pads `Y` by `cI` so that the
/// leftover of `ρ + Y − Σ E(P)` is diagonally dominant.
fn robustness_upper(layout: &Layout, rho: &CMatrix, z: &[Vec<CMatrix>]) -> (f64, f64) {
    let y = layout.sum(&z[1]);
    let leftover = rho + &y - layout.sum(&z[0]);
    let pad = dominance_gap(&leftover).max(0.0);
    (linalg::trace(&y).re + pad * layout.dim as f64, pad)
}

/// Dual bound: for `W` with every `k`-principal submatrix in `[0, I]`,
/// `R_k(ρ) ≥ −Tr(Wρ)`. The multiplier is shifted and scaled into that set.
fn robustness_lower(layout: &Layout, rho: &CMatrix, y: &CMatrix) -> f64 {
    let w = -y;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for s in 0..layout.subsets.len() {
        let (vals, _) = linalg::hermitian_eigen(&layout.restrict(&w, s));
        lo = lo.min(vals[0]);
        hi = hi.max(vals[vals.len() - 1]);
    }
    let shift = lo.min(0.0);
    let alpha = 1.0 / (hi - shift).max(1.0);
    let beta = -alpha * shift;
    let tr_rho = linalg::trace(rho).re;
    let bound = -alpha * linalg::trace_product(rho, &w).re - beta * tr_rho;
    bound.max(0.0)
}

pub(crate) fn solve_robustness(layout: &Layout, rho: &CMatrix, budget: &OracleBudget) -> RobustnessRaw {
    let copies = [Copy { sign: 1.0, cost: 0.0 }, Copy { sign: -1.0, cost: 1.0 }];
    let gap_target = budget.tolerance;
    let mut best_upper = f64::INFINITY;
    let mut best_z: Option<Vec<Vec<CMatrix>>> = None;
    let mut best_lower = 0.0f64;

    'restarts: for restart in 0..budget.restarts {
        let admm = Admm {
            layout,
            copies: &copies,
            target: rho,
            penalty: penalty_for(restart),
        };
        let mut it = admm.start(restart, budget.seed);
        for iter in 1..=budget.max_iterations {
            admm.step(&mut it);
            if iter % CHECK_EVERY != 0 && iter != budget.max_iterations {
                continue;
            }
            let (upper, _) = robustness_upper(layout, rho, &it.z);
            if upper < best_upper {
                best_upper = upper;
                best_z = Some(it.z.clone());
            }
            best_lower = best_lower.max(robustness_lower(layout, rho, &it.y));
            if best_upper - best_lower <= gap_target {
                break 'restarts;
            }
        }
    }

    let z = best_z.expect("at least one iteration runs");
    let (upper, pad) = robustness_upper(layout, rho, &z);
    let mut delta_parts = layout.block_parts(&z[1], 1.0);
    if pad > 0.0 {
        for i in 0..layout.dim {
            let mut v = CVector::zeros(layout.dim);
            v[i] = C64::new(1.0, 0.0);
            delta_parts.push((pad, v));
        }
    }
    let mut y = layout.sum(&z[1]);
    for i in 0..layout.dim {
        y[(i, i)] += C64::new(pad, 0.0);
    }
    let leftover = rho + &y - layout.sum(&z[0]);
    let mut mix_parts = layout.block_parts(&z[0], 1.0);
    mix_parts.extend(dominant_parts(&leftover, 1.0));
    RobustnessRaw {
        upper,
        lower: best_lower.min(upper),
        converged: upper - best_lower <= gap_target,
        delta_parts,
        mix_parts,
    }
}

/// Diagonal pad tried by each decomposition restart. The first restarts pad by
/// a fraction of `λ_min(op)`, which succeeds whenever `op` sits that far inside
/// the cone; later ones fall back to `floor`.
fn shift_for(restart: usize, lambda_min: f64, floor: f64) -> f64 {
    match restart {
        0 => (0.5 * lambda_min).max(floor),
        1 => (lambda_min / 16.0).max(floor),
        _ => floor,
    }
}

/// Decomposes `op` as `Σ E(P) + εI + L` with `L` the solver leftover. When
/// `εI + L` is diagonally dominant it is split exactly; otherwise the pad is
/// folded into the blocks, which are then polished against `op` directly.
///
/// Without a cost term the ADMM iterates do not depend on the penalty, so
/// restarts vary the pad `ε` and the starting point instead.
pub(crate) fn solve_decomposition(layout: &Layout, op: &CMatrix, budget: &OracleBudget) -> Vec<(f64, CVector)> {
    let copies = [Copy { sign: 1.0, cost: 0.0 }];
    let floor = budget.tolerance / (10.0 * layout.dim as f64);
    let lambda_min = linalg::min_eigenvalue(op);
    let polish_target = POLISH_FACTOR * budget.tolerance;
    let mut best: Option<(f64, Vec<(f64, CVector)>)> = None;

    for restart in 0..budget.restarts {
        let eps = shift_for(restart, lambda_min, floor);
        let mut shifted = op.clone();
        for i in 0..layout.dim {
            shifted[(i, i)] -= C64::new(eps, 0.0);
        }
        let admm = Admm {
            layout,
            copies: &copies,
            target: &shifted,
            penalty: 1.0,
        };
        let mut it = admm.start(restart, budget.seed);
        let mut restart_best: Option<(f64, Vec<CMatrix>)> = None;
        for iter in 1..=budget.max_iterations {
            admm.step(&mut it);
            if iter % CHECK_EVERY != 0 && iter != budget.max_iterations {
                continue;
            }
            let leftover = &shifted - layout.sum(&it.z[0]);
            let mut padded = leftover.clone();
            for i in 0..layout.dim {
                padded[(i, i)] += C64::new(eps, 0.0);
            }
            if dominance_gap(&padded) <= 0.0 {
                let mut parts = layout.block_parts(&it.z[0], 1.0);
                parts.extend(dominant_parts(&padded, 1.0));
                return parts;
            }
            let residual = linalg::frobenius(&leftover);
            if restart_best.as_ref().is_none_or(|(r, _)| residual < *r) {
                restart_best = Some((residual, it.z[0].clone()));
            }
        }

        let (residual, mut blocks) = restart_best.expect("at least one iteration runs");
        let share = eps / layout.diagonal_cover();
        for b in blocks.iter_mut() {
            for a in 0..b.nrows() {
                b[(a, a)] += C64::new(share, 0.0);
            }
        }
        let (residual, parts) = match polish(layout, op, &blocks, POLISH_STEPS) {
            Some((r, polished)) if r < residual => (r, layout.block_parts(&polished, 1.0)),
            _ => (residual, layout.block_parts(&blocks, 1.0)),
        };
        if best.as_ref().is_none_or(|(r, _)| residual < *r) {
            best = Some((residual, parts));
        }
        if residual <= polish_target {
            break;
        }
    }

    best.expect("at least one restart runs").1
}

const POLISH_STEPS: usize = 40;
/// Polished residuals below `POLISH_FACTOR · tolerance` end the restart loop.
const POLISH_FACTOR: f64 = 1e-3;

/// Real coordinates of a Hermitian matrix in an orthonormal basis.
fn hermitian_coords_into(m: &CMatrix, out: &mut [f64]) {
    let n = m.nrows();
    let r2 = core::f64::consts::SQRT_2;
    let mut idx = 0;
    for i in 0..n {
        out[idx] = m[(i, i)].re;
        idx += 1;
        for j in (i + 1)..n {
            out[idx] = r2 * m[(i, j)].re;
            out[idx + 1] = r2 * m[(i, j)].im;
            idx += 2;
        }
    }
}

/// Levenberg–Marquardt on block factors `P_S = V_S V_S†` for `Σ E_S(P_S) = op`.
/// Returns the best residual reached and the corresponding blocks.
fn polish(layout: &Layout, op: &CMatrix, blocks: &[CMatrix], steps: usize) -> Option<(f64, Vec<CMatrix>)> {
    let d = layout.dim;
    let k = layout.block_size();
    let rows = d * d;
    let mut factors: Vec<CMatrix> = blocks
        .iter()
        .map(|b| {
            let (vals, vecs) = linalg::hermitian_eigen(b);
            let mut v = vecs;
            for (c, &lam) in vals.iter().enumerate() {
                let root = libm::sqrt(lam.max(0.0));
                for a in 0..k {
                    v[(a, c)] *= root;
                }
            }
            v
        })
        .collect();

    let products = |f: &[CMatrix]| -> Vec<CMatrix> { f.iter().map(|v| v * v.adjoint()).collect() };
    let misfit = |f: &[CMatrix]| -> (f64, DMatrix<f64>) {
        let diff = layout.sum(&products(f)) - op;
        let mut r = DMatrix::zeros(rows, 1);
        hermitian_coords_into(&diff, r.as_mut_slice());
        (r.norm(), r)
    };

    let (mut norm, mut r) = misfit(&factors);
    let start = norm;
    let params = factors.len() * k * k * 2;
    let mut jac = DMatrix::<f64>::zeros(rows, params);
    let mut col = alloc::vec![0.0; rows];
    let mut damping = 1e-3;
    let mut probe = CMatrix::zeros(d, d);

    for _ in 0..steps {
        if norm <= 1e-15 {
            break;
        }
        let mut p = 0;
        for (s, v) in factors.iter().enumerate() {
            let idx = &layout.subsets[s];
            for a in 0..k {
                for c in 0..k {
                    for imaginary in [false, true] {
                        probe.fill(C64::new(0.0, 0.0));
                        let unit = if imaginary {
                            C64::new(0.0, 1.0)
                        } else {
                            C64::new(1.0, 0.0)
                        };
                        // d(VV†) = e_a (u v_c)† + (u v_c) e_a† scaled by the unit direction.
                        for b in 0..k {
                            let term = unit * v[(b, c)].conj();
                            probe[(idx[a], idx[b])] += term;
                            probe[(idx[b], idx[a])] += term.conj();
                        }
                        hermitian_coords_into(&probe, &mut col);
                        jac.column_mut(p).copy_from_slice(&col);
                        p += 1;
                    }
                }
            }
        }

        let gram = &jac * jac.transpose();
        let mut improved = false;
        for _ in 0..8 {
            let damped = &gram + DMatrix::<f64>::identity(rows, rows) * (damping * (1.0 + gram.diagonal().max()));
            let Some(chol) = damped.cholesky() else {
                damping *= 10.0;
                continue;
            };
            let step = jac.transpose() * chol.solve(&r);
            let mut trial = factors.clone();
            let mut p = 0;
            for v in trial.iter_mut() {
                for a in 0..k {
                    for c in 0..k {
                        v[(a, c)] -= C64::new(step[p], step[p + 1]);
                        p += 2;
                    }
                }
            }
            let (trial_norm, trial_r) = misfit(&trial);
            if trial_norm < norm {
                factors = trial;
                norm = trial_norm;
                r = trial_r;
                damping = (damping * 0.1).max(1e-12);
                improved = true;
                break;
            }
            damping *= 10.0;
        }
        if !improved {
            break;
        }
    }
    (norm < start).then(|| (norm, products(&factors)))
}
