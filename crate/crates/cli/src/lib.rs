// Validation guards use `!(x > 0.0)` on purpose: the negation also
// rejects NaN, which `x <= 0.0` would let through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Experiment harness for the `nuts-engine` samplers: configuration,
//! execution over sampler/target grids, artifact persistence, and the
//! ESS-per-gradient comparison.

pub mod config;
pub mod csvio;
pub mod modelspec;
pub mod report;
pub mod runner;
