//! Tail bounds for sum-type recursions on random trees: weighted path
//! length and Wiener index of `b`-ary and linear recursive trees, the
//! piecewise sub-Gaussian/sub-Poisson bound, exact finite-`n` oracles, and
//! the urn coupling behind the contraction condition.

pub mod cli;
pub mod error;
pub mod exact_engine;
pub mod functionals;
pub mod harness;
pub mod numerics;
#[cfg(test)]
mod properties;
pub mod recursion_core;
pub mod rng;
pub mod stats;
pub mod sum;
pub mod tail_bounds;
pub mod tree_models;
pub mod urn_domination;

pub use error::{Error, Result};
