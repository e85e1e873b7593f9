//! Bayesian mixtures of finite mixtures with a telescoping sampler.
//!
//! The crate covers priors on the number of components, the partition
//! calculus they induce, component kernels for univariate and multivariate
//! Gaussian and latent class data, a trans-dimensional Gibbs sampler,
//! post-processing for identification, and file-based input/output.

pub mod cluster;
pub mod diagnostics;
pub mod error;
pub mod identify;
pub mod io;
pub mod kernel;
pub mod partition;
pub mod prior;
pub mod sampler;
pub mod special;

pub use error::{Error, Result};
