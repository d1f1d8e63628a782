// Validation guards use `!(x > 0.0)` on purpose: the negation also
// rejects NaN, which `x <= 0.0` would let through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Gradient-based MCMC sampling engine.
//!
//! Provides Hamiltonian Monte Carlo and the No-U-Turn Sampler with
//! dual-averaging step-size adaptation, together with the benchmark
//! posteriors, baseline samplers, and effective-sample-size diagnostics
//! needed to compare their efficiency.

pub mod adapt;
pub mod baselines;
pub mod chain;
pub mod diagnostics;
pub mod error;
pub mod hamiltonian;
pub mod hmc;
pub mod linalg;
pub mod model;
pub mod nuts;
pub mod rng;

pub use error::Error;
pub type Result<T> = std::result::Result<T, Error>;
