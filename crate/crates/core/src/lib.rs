//! Unbiased Monte Carlo estimation of transition densities for scalar
//! diffusions, and Monte Carlo maximum likelihood built on top of it.
//!
//! The estimator works on the unit-diffusion scale `X = η(V, θ)`. For every
//! observed pair `(v, w)` a θ-free random element is drawn once; evaluating the
//! estimator at any θ reuses that element, so the whole likelihood surface is
//! driven by common random numbers and is continuous in θ.
//!
//! Module map:
//! - [`model`]: parameter boxes, the transformed-model contract and the
//!   logistic-growth and drifted-Brownian models.
//! - [`rng`]: keyed counter-based streams and primitive draws.
//! - [`bridge`]: Brownian-bridge minimum decomposition, the coupled skeleton
//!   construction, the exact bridge sampler and the pointwise estimator.
//! - [`sam`]: random elements, banks, likelihood surfaces and derivatives.
//! - [`mle`]: Nelder–Mead maximization and variance assembly.
//! - [`data`]: datasets, Euler simulation and brute-force oracles.
//! - [`stats`]: Kolmogorov–Smirnov statistics and small summaries.

pub mod bridge;
pub mod data;
mod error;
pub mod mle;
pub mod model;
pub mod rng;
pub mod sam;
pub mod stats;

pub use error::{Error, Result};
