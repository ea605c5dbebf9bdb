//! Bayesian in-context regression lab.
//!
//! Samples prompts from hierarchical mixtures of function families, computes
//! posterior-mean estimators and convex baselines, and evaluates arbitrary
//! predictors through loss curves, weight probes and Fourier spectra.

pub mod baselines;
pub mod bayes;
pub mod bridge;
pub mod error;
pub mod eval;
pub mod linalg;
pub mod probe;
pub mod rng;
pub mod sampler;
pub mod tasks;

pub use error::{Error, Result};
