//! p-adic machinery for Asai distributions: bounded-precision arithmetic,
//! Iwasawa-algebra series, tower patching, logarithmic matrices and signed
//! decompositions, and the exact Euler-factor identities behind them.

pub mod error;
pub mod padic;
pub mod series;
pub mod iwasawa;
pub mod cyclo;
pub mod distribution;
pub mod tower;
pub mod patch;
pub mod logmatrix;
pub mod decompose;
pub mod classical;

pub use error::{Error, Result};
