//! The `kcoh` subcommands. Each writes to `--out` when given, else to the
//! supplied writer.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use kcoherence_core::error::Role;
use kcoherence_core::measures::{geometric_k, geometric_k_oracle, robustness_k, robustness_k_oracle};
use kcoherence_core::oracles::sample_pure;
use kcoherence_core::transforms::{deterministic_feasible, nonisolation_witness, report_with_map};
use kcoherence_core::{CoherenceLevel, DensityOperator, Error, OracleBudget};

use crate::error::CliError;
use crate::io::{read_state, state_to_json, to_json, ReportJson, WitnessJson};
use crate::sweep::{run_sweep, write_csv};

#[derive(Debug, Parser)]
#[command(name = "kcoh", version, about = "Multilevel coherence measures and conversions")]
pub struct Cli {
    #[command(flatten)]
    pub budget: BudgetArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct BudgetArgs {
    /// Oracle iterations per restart.
    #[arg(long, global = true, default_value_t = 2000)]
    pub budget_iters: usize,
    /// Oracle restarts.
    #[arg(long, global = true, default_value_t = 20)]
    pub budget_restarts: usize,
    /// Oracle tolerance.
    #[arg(long, global = true, default_value_t = 1e-7)]
    pub tol: f64,
}

impl BudgetArgs {
    pub fn budget(&self, seed: u64) -> OracleBudget {
        OracleBudget {
            max_iterations: self.budget_iters,
            restarts: self.budget_restarts,
            seed,
            tolerance: self.tol,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Which {
    Robustness,
    Geometric,
    Both,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print R_k, G_k and G_{k+1} of a state file.
    Measure {
        state: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long, value_enum, default_value_t = Which::Both)]
        which: Which,
        /// Also run the numerical oracles and print their deviation.
        #[arg(long)]
        oracle: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Conversion report for a source/target pair, optionally with the map at scale p.
    Convert {
        source: PathBuf,
        target: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        p: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Random resource pairs as CSV.
    Sweep {
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 100)]
        pairs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// A different state that converts deterministically into the target.
    Witness {
        target: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a random pure state file.
    Sample {
        #[arg(long)]
        dim: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        min_rank: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn emit<W: Write>(text: &[u8], out: Option<&Path>, stdout: &mut W) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| CliError::io(path, e)),
        None => stdout
            .write_all(text)
            .map_err(|e| CliError::io(Path::new("<stdout>"), e)),
    }
}

fn level_for(k: usize, dim: usize) -> Result<CoherenceLevel, CliError> {
    Ok(CoherenceLevel::new(k, dim)?)
}

/// Names the offending file in not-a-resource errors.
fn blame(err: Error, source: &Path, target: &Path) -> CliError {
    match err {
        Error::NotResourceState { role, .. } => {
            let file = if role == Role::Source { source } else { target };
            CliError::from(err).in_file(file)
        }
        other => other.into(),
    }
}

pub fn measure_text(
    state: &Path,
    k: usize,
    which: Which,
    oracle: bool,
    budget: &OracleBudget,
) -> Result<String, CliError> {
    let psi = read_state(state)?;
    let d = psi.dim();
    let level = level_for(k, d)?;
    let mut text = String::new();
    if which != Which::Geometric {
        let r = robustness_k(&psi, level)?.value;
        write!(text, "R_{k} {r}").unwrap();
        if oracle {
            let o = robustness_k_oracle(&DensityOperator::from_pure(&psi), level, budget)?;
            write!(text, " oracle {} deviation {:e}", o.value, (o.value - r).abs()).unwrap();
        }
        text.push('\n');
    }
    if which != Which::Robustness {
        let mut levels = vec![level];
        if k < d {
            levels.push(level.next(d)?);
        }
        for lv in levels {
            let g = geometric_k(&psi, lv)?.value;
            write!(text, "G_{} {g}", lv.k()).unwrap();
            if oracle {
                let o = geometric_k_oracle(&psi, lv)?;
                write!(text, " oracle {o} deviation {:e}", (o - g).abs()).unwrap();
            }
            text.push('\n');
        }
    }
    Ok(text)
}

pub fn convert_json(
    source: &Path,
    target: &Path,
    k: usize,
    p: Option<f64>,
    budget: &OracleBudget,
) -> Result<String, CliError> {
    let s = read_state(source)?;
    let t = read_state(target)?;
    let level = level_for(k, s.dim())?;
    let report = match p {
        Some(p) => report_with_map(&s, &t, level, p, budget),
        None => deterministic_feasible(&s, &t, level, budget),
    }
    .map_err(|e| blame(e, source, target))?;
    Ok(to_json(&ReportJson::from_report(&report)))
}

pub fn witness_json(target: &Path, k: usize, budget: &OracleBudget) -> Result<String, CliError> {
    let t = read_state(target)?;
    let level = level_for(k, t.dim())?;
    let w = nonisolation_witness(&t, level, budget, budget.seed).map_err(|e| blame(e, target, target))?;
    Ok(to_json(&WitnessJson::from_witness(&w)))
}

pub fn sweep_csv(dim: usize, k: usize, pairs: usize, seed: u64, budget: &OracleBudget) -> Result<Vec<u8>, CliError> {
    let rows = run_sweep(dim, k, pairs, seed, budget)?;
    let mut buf = Vec::new();
    write_csv(&rows, &mut buf).map_err(|e| CliError::io(Path::new("<csv>"), e.into()))?;
    Ok(buf)
}

pub fn run<W: Write>(cli: &Cli, stdout: &mut W) -> Result<(), CliError> {
    match &cli.command {
        Command::Measure {
            state,
            k,
            which,
            oracle,
            seed,
            out,
        } => {
            let text = measure_text(state, *k, *which, *oracle, &cli.budget.budget(*seed))?;
            emit(text.as_bytes(), out.as_deref(), stdout)
        }
        Command::Convert {
            source,
            target,
            k,
            p,
            seed,
            out,
        } => {
            let text = convert_json(source, target, *k, *p, &cli.budget.budget(*seed))?;
            emit(text.as_bytes(), out.as_deref(), stdout)
        }
        Command::Sweep {
            dim,
            k,
            pairs,
            seed,
            out,
        } => {
            let csv = sweep_csv(*dim, *k, *pairs, *seed, &cli.budget.budget(*seed))?;
            emit(&csv, out.as_deref(), stdout)
        }
        Command::Witness { target, k, seed, out } => {
            let text = witness_json(target, *k, &cli.budget.budget(*seed))?;
            emit(text.as_bytes(), out.as_deref(), stdout)
        }
        Command::Sample {
            dim,
            seed,
            min_rank,
            out,
        } => {
            let s = sample_pure(*dim, *seed, *min_rank)?;
            emit(state_to_json(&s).as_bytes(), out.as_deref(), stdout)
        }
    }
}
