//! Seeded graph matching on correlated stochastic block models.
//!
//! The pipeline: sample or load a pair of correlated graphs with a partially
//! revealed correspondence, build seed-overlap score matrices for the
//! unrevealed vertices, and complete the correspondence with assignment
//! solvers or relaxation-based matchers. Experiment drivers and brute-force
//! oracles live alongside for benchmarking and validation.

pub mod assign;
pub mod csbm;
pub mod error;
pub mod graph;
pub mod harness;
pub mod mat;
pub mod matchers;
pub mod oracle;
pub mod relax;
pub mod scores;

pub use error::{Error, Result};
