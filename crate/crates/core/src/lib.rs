//! Bayesian retrodiction for finite classical and quantum maps.
//!
//! Classical maps are column-stochastic matrices with entry `(a', a) = φ(a'|a)`,
//! quantum maps are Kraus channels. The crate computes retrodiction maps
//! (Bayes rule and the Petz recovery map), geometric descriptors of maps
//! (absolute determinant, fixed centroid displacement, skew) and two Monte Carlo
//! irreversibility measures: Bayesian subjectivity and the average change in
//! divergence.
//!
//! The crate is `no_std` and only needs `alloc`.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod bit_analytic;
pub mod classical;
mod error;
pub mod linalg;
pub mod measures;
pub mod oracle;
pub mod quantum;
pub mod samplers;

pub use error::Error;

pub type Result<T> = core::result::Result<T, Error>;

/// Rejection threshold for pushforward entries and eigenvalues.
pub const PUSHFORWARD_EPS: f64 = 1e-9;
