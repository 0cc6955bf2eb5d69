//! Multilevel coherence toolkit.
//!
//! Pure states and density operators in a fixed reference basis, the hierarchy
//! `I_1 ⊂ I_2 ⊂ … ⊂ I_d` of states that are mixtures of pure states with at
//! most `k` nonzero coefficients, and the machinery built on top of it:
//!
//! - [`measures`]: closed-form robustness `R_k` and geometric measure `G_k` for
//!   pure states, plus numerical oracles evaluating the defining optimizations.
//! - [`oracles`]: membership certificates for `I_k`, the optimal free state `δ`
//!   attaining the robustness, and seeded random sampling.
//! - [`maps`]: two-outcome measure-and-prepare maps and the trace-non-increasing
//!   `k`-coherence-preserving map `σ ↦ p·Tr(ψ₁σ)·ψ₂ + Tr((I−ψ₁)σ)·δ`.
//! - [`transforms`]: conversion probability bounds, deterministic feasibility,
//!   non-isolation witnesses.
//!
//! The crate is `no_std` and needs only `alloc`. Every randomized routine takes
//! an explicit seed and is deterministic given its inputs.

#![cfg_attr(not(test), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod error;
pub mod linalg;
pub mod maps;
pub mod measures;
pub mod oracles;
pub mod statespace;
pub mod transforms;

pub use error::{Error, Result};
pub use linalg::{CMatrix, CVector, C64};
pub use maps::{KCoherencePreservingMap, TwoOutcomeMap, VerificationReport};
pub use measures::{GeometricResult, RobustnessBound, RobustnessResult};
pub use oracles::{IkCertificate, OptimalDelta, OracleBudget};
pub use statespace::{CoherenceLevel, DensityOperator, PureState};
pub use transforms::{ConversionReport, NonIsolationWitness};
