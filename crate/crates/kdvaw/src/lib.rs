//! Online kernel regression with dynamic-regret guarantees.
//!
//! This crate implements discounted Vovk-Azoury-Warmuth forecasting lifted
//! to reproducing-kernel Hilbert spaces through finite-dimensional subspace
//! approximations, together with a benchmark harness that measures dynamic
//! regret against path-length-controlled comparators and numerically
//! certifies the forecaster's regret bounds.
//!
//! The pieces compose bottom-up:
//!
//! - [`linalg`]: packed symmetric matrices, Cholesky solves, rank-one
//!   inverse updates, Jacobi eigendecomposition.
//! - [`kernels`]: Gaussian / polynomial / analytic dot-product / Matern
//!   kernels, the induced pseudometric, and domain sampling.
//! - [`features`]: explicit orthonormal truncated feature maps with tail
//!   bounds and the fast-regime dimension rule.
//! - [`sections`]: greedy farthest-point nets, Gram-eigenbasis section
//!   subspaces, and the power-function diagnostic.
//! - [`dvaw`]: the discounted forecaster itself.
//! - [`ensemble`]: the discount-grid ensemble and the dyadic aggregator
//!   over subspace dimensions.
//! - [`harness`]: environments, prequential evaluation, regret traces,
//!   bound certification, scaling fits.
//! - [`config`] / [`cli`]: JSON-configured runs, sweeps, and reports.
//!
//! Start with the `examples/` directory: each file is a runnable tour of
//! one capability (`cargo run --release --example dvaw_forecaster`, etc.).

// indexed loops over parallel arrays and matrix entries read better than
// zipped iterator chains in the dense numerical kernels here
#![allow(clippy::needless_range_loop)]

pub mod certify;
pub mod cli;
pub mod config;
pub mod dvaw;
pub mod ensemble;
pub mod error;
pub mod featuremap;
pub mod features;
pub mod harness;
pub mod kernels;
pub mod linalg;
pub mod sections;

pub use error::{Error, Result};
