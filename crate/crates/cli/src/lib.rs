//! Batch front end for asai-core: JSON in and out, seeded towers, the demo
//! pipeline and the invariant grid.

pub mod commands;
pub mod grid;
pub mod io;

pub use io::{CliError, CliResult, Outcome, PRECISION_ENV};
