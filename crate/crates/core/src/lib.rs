//! Mean-function estimation for functional data with sparse ReLU networks.
//!
//! Functional data are `n` noisy surfaces observed on a common regular grid
//! in `(0, 1]^d`. This crate simulates such data exactly, studies the
//! covariance spectrum that sets the effective sample size `n N^varrho`,
//! fits a sparse ReLU network to the pointwise means by empirical risk
//! minimization, and runs Monte Carlo risk studies.
//!
//! Modules, bottom-up:
//!
//! - [`grid`]: evaluation grids and their point ordering.
//! - [`spectrum`]: kernels, kernel matrices and top-eigenvalue analysis.
//! - [`simulate`]: mean functions, Gaussian-process subject effects, datasets.
//! - [`network`]: the sparse ReLU network class.
//! - [`train`]: empirical risk minimization with Adam and an L1 penalty.
//! - [`evaluate`]: empirical L2 risk, replications, rate diagnostics, baseline.
//! - [`io`]: binary dataset and parameter files, CSV and PGM output.

pub mod error;
pub mod evaluate;
pub mod grid;
pub mod io;
pub mod network;
pub mod rng;
pub mod simulate;
pub mod spectrum;
pub mod stats;
pub mod train;

pub use error::{Error, Result};
pub use grid::GridDesign;
