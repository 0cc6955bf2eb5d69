use thiserror::Error;

/// Which side of a conversion an error refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Source,
    Target,
}

impl core::fmt::Display for Role {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Role::Source => f.write_str("source"),
            Role::Target => f.write_str("target"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid state: {0}")]
    InvalidState(&'static str),

    #[error("state norm {norm} differs from 1 by more than {tol}")]
    NotNormalized { norm: f64, tol: f64 },

    #[error("dimension must be at least 2 (got {0})")]
    DimensionTooSmall(usize),

    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("invalid operator: {0}")]
    InvalidOperator(&'static str),

    #[error("operator is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),

    #[error("operator is not positive semidefinite (min eigenvalue {0:e})")]
    NotPositive(f64),

    #[error("operator trace {0} outside (0, 1]")]
    InvalidTrace(f64),

    #[error("coherence level k = {k} out of range [{min}, {max}]")]
    LevelOutOfRange { k: usize, min: usize, max: usize },

    #[error("zero tolerance {0} outside [0, 1e-6]")]
    InvalidTolerance(f64),

    #[error("min-rank constraint {constraint} exceeds dimension {dim}")]
    InvalidConstraint { constraint: usize, dim: usize },

    #[error("effect has eigenvalue {0} outside [0, 1]")]
    InvalidEffect(f64),

    #[error("map scale p = {0} outside (0, 1]")]
    InvalidScale(f64),

    #[error("{role} state has coherence rank {rank} <= k = {k}, so it is not a resource state")]
    NotResourceState { role: Role, rank: usize, k: usize },

    #[error("p = {p} exceeds the conversion bound {bound}")]
    BoundViolation { p: f64, bound: f64 },

    #[error("robustness oracle did not reach the analytic value: s = {s_value}, expected {expected}")]
    OracleNotConverged { s_value: f64, expected: f64 },

    #[error("invalid oracle budget: {0}")]
    InvalidBudget(&'static str),

    #[error("conversion check failed: max entry deviation {0:e}")]
    ConversionCheckFailed(f64),
}

pub type Result<T> = core::result::Result<T, Error>;
