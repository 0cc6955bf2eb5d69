//! Seeded sampling of states and of members of `I_k`.

use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, C64};
use crate::statespace::{CoherenceLevel, DensityOperator, PureState};

pub type OracleRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> OracleRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// SplitMix64 of `seed ⊕ index`-style mixing; stable per-trial seeds.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Box–Muller standard normal.
pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let u1 = 1.0 - rng.gen::<f64>();
    let u2 = rng.gen::<f64>();
    libm::sqrt(-2.0 * libm::log(u1)) * libm::cos(2.0 * PI * u2)
}

pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::new(standard_normal(rng), standard_normal(rng))
}

/// Unitarily invariant random state on the given support.
pub fn random_pure_on_support<R: Rng + ?Sized>(rng: &mut R, dim: usize, support: &[usize]) -> PureState {
    loop {
        let mut coeffs = alloc::vec![C64::new(0.0, 0.0); dim];
        for &i in support {
            coeffs[i] = complex_normal(rng);
        }
        if let Ok(s) = PureState::normalized(coeffs) {
            return s;
        }
    }
}

pub fn random_pure<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> PureState {
    let support: Vec<usize> = (0..dim).collect();
    random_pure_on_support(rng, dim, &support)
}

/// Random `r`-subset of `0..n`, sorted.
pub fn random_subset<R: Rng + ?Sized>(rng: &mut R, n: usize, r: usize) -> Vec<usize> {
    let mut idx = random_permutation(rng, n);
    idx.truncate(r);
    idx.sort_unstable();
    idx
}

/// Fisher–Yates permutation of `0..n`.
pub fn random_permutation<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.gen_range(0..=i);
        idx.swap(i, j);
    }
    idx
}

/// Sample from the unit sphere of `C^dim`, rejecting states whose coherence
/// rank is below `min_rank`.
pub fn sample_pure(dim: usize, seed: u64, min_rank: Option<usize>) -> Result<PureState> {
    if dim < 2 {
        return Err(Error::DimensionTooSmall(dim));
    }
    let min_rank = min_rank.unwrap_or(1);
    if min_rank > dim {
        return Err(Error::InvalidConstraint {
            constraint: min_rank,
            dim,
        });
    }
    let mut rng = rng_from_seed(seed);
    loop {
        let s = random_pure(&mut rng, dim);
        if s.rank() >= min_rank {
            return Ok(s);
        }
    }
}

/// Flat Dirichlet weights.
pub fn dirichlet<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| -libm::log(1.0 - rng.gen::<f64>())).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / total).collect()
}

/// A random member of `I_k` with its defining decomposition: between 1 and
/// `d²` components, Dirichlet weights, each component a random state on a
/// random support of size `1..=k`.
pub fn random_ik_member<R: Rng + ?Sized>(
    rng: &mut R,
    dim: usize,
    level: CoherenceLevel,
) -> (DensityOperator, Vec<(f64, PureState)>) {
    let count = rng.gen_range(1..=dim * dim);
    let weights = dirichlet(rng, count);
    let mut matrix = CMatrix::zeros(dim, dim);
    let mut parts = Vec::with_capacity(count);
    for w in weights {
        let size = rng.gen_range(1..=level.k());
        let support = random_subset(rng, dim, size);
        let s = random_pure_on_support(rng, dim, &support);
        matrix += s.projector().scale(w);
        parts.push((w, s));
    }
    (DensityOperator::from_matrix_unchecked(matrix), parts)
}

/// Random density operator `GG†/Tr(GG†)` with `G` a `dim × rank` Ginibre matrix.
pub fn random_density<R: Rng + ?Sized>(rng: &mut R, dim: usize, rank: usize) -> DensityOperator {
    let g = CMatrix::from_fn(dim, rank.max(1), |_, _| complex_normal(rng));
    let m = &g * g.adjoint();
    let tr = crate::linalg::trace(&m).re;
    DensityOperator::from_matrix_unchecked(m.unscale(tr))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sampled_states_are_normalized_and_deterministic() {
        for seed in 0..20 {
            let s = sample_pure(3, seed, None).unwrap();
            assert!((s.inner(&s).re - 1.0).abs() < 1e-12);
            assert_eq!(s, sample_pure(3, seed, None).unwrap());
        }
        assert_ne!(sample_pure(3, 1, None).unwrap(), sample_pure(3, 2, None).unwrap());
    }

    #[test]
    fn min_rank_constraint() {
        for seed in 0..20 {
            assert_eq!(sample_pure(4, seed, Some(4)).unwrap().rank(), 4);
        }
        assert!(matches!(
            sample_pure(3, 0, Some(4)),
            Err(Error::InvalidConstraint { constraint: 4, dim: 3 })
        ));
        assert!(matches!(sample_pure(1, 0, None), Err(Error::DimensionTooSmall(1))));
    }

    #[test]
    fn ik_members_have_rank_limited_parts() {
        let mut rng = rng_from_seed(7);
        let level = CoherenceLevel::new(2, 4).unwrap();
        for _ in 0..20 {
            let (rho, parts) = random_ik_member(&mut rng, 4, level);
            assert!((rho.trace() - 1.0).abs() < 1e-12);
            assert!(parts.iter().all(|(_, s)| s.rank() <= 2));
            assert!(DensityOperator::new(rho.matrix().clone()).is_ok());
        }
    }

    #[test]
    fn derived_seeds_differ() {
        let a: Vec<u64> = (0..100).map(|i| derive_seed(5, i)).collect();
        let mut b = a.clone();
        b.sort_unstable();
        b.dedup();
        assert_eq!(b.len(), 100);
    }
}
