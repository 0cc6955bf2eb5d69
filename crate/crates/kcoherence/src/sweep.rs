//! Randomized conversion sweeps written as CSV.

use std::io::Write;

use kcoherence_core::maps::build_k_preserving;
use kcoherence_core::oracles::sample_pure;
use kcoherence_core::oracles::sampling::derive_seed;
use kcoherence_core::transforms::{conversion_error, conversion_report, CONVERSION_TOL};
use kcoherence_core::{CoherenceLevel, Error, OracleBudget};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub const HEADER: [&str; 9] = [
    "dim",
    "k",
    "source_seed",
    "target_seed",
    "g_source",
    "r_target",
    "p_max",
    "feasible",
    "verified",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub dim: usize,
    pub k: usize,
    pub source_seed: u64,
    pub target_seed: u64,
    pub g_source: f64,
    pub r_target: f64,
    pub p_max: f64,
    pub feasible: bool,
    /// The map built at `p_max` sends the source to `p_max` times the target.
    pub verified: bool,
}

/// Seeds of pair `index`.
pub fn pair_seeds(seed: u64, index: usize) -> (u64, u64) {
    let i = index as u64;
    (derive_seed(seed, 2 * i), derive_seed(seed, 2 * i + 1))
}

fn evaluate(
    dim: usize,
    level: CoherenceLevel,
    seed: u64,
    index: usize,
    budget: &OracleBudget,
) -> Result<SweepRow, Error> {
    let (source_seed, target_seed) = pair_seeds(seed, index);
    let k = level.k();
    let source = sample_pure(dim, source_seed, Some(k + 1))?;
    let target = sample_pure(dim, target_seed, Some(k + 1))?;
    let report = conversion_report(&source, &target, level)?;
    let verified = build_k_preserving(&source, &target, level, report.p_max, budget)
        .map(|map| conversion_error(&map) <= CONVERSION_TOL)
        .unwrap_or(false);
    Ok(SweepRow {
        dim,
        k,
        source_seed,
        target_seed,
        g_source: report.g_source,
        r_target: report.r_target,
        p_max: report.p_max,
        feasible: report.deterministic_feasible,
        verified,
    })
}

/// Evaluates `pairs` random resource pairs in parallel; rows come back in pair order.
pub fn run_sweep(dim: usize, k: usize, pairs: usize, seed: u64, budget: &OracleBudget) -> Result<Vec<SweepRow>, Error> {
    let level = CoherenceLevel::new(k, dim)?;
    if k < 2 || k >= dim {
        return Err(Error::LevelOutOfRange {
            k,
            min: 2,
            max: dim - 1,
        });
    }
    budget.validate()?;
    (0..pairs)
        .into_par_iter()
        .map(|i| evaluate(dim, level, seed, i, budget))
        .collect()
}

pub fn write_csv<W: Write>(rows: &[SweepRow], out: W) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(HEADER)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}
