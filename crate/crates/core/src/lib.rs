//! Exact synthesis of observation functions and positional strategies for
//! Markov decision processes under an observation budget.

// Error paths are cold; keeping the rich error types unboxed is simpler.
#![allow(clippy::result_large_err)]

pub mod analysis;
pub mod cli;
pub mod enumerative;
pub mod experiments;
pub mod format;
pub mod generate;
pub mod model;
pub mod rational;
pub mod smt;
pub mod solve;
pub mod tpmc;
