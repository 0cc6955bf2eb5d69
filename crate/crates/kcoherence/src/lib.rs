//! File formats, sweeps and the command-line front end for `kcoherence-core`.
//!
//! Exit codes of the `kcoh` binary: 2 parse, 3 range, 4 not a resource
//! state, 5 bound violation, 6 I/O, 1 anything else.

pub mod commands;
pub mod error;
pub mod io;
pub mod sweep;

pub use error::CliError;
