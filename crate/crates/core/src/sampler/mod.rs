//! Posterior means without closed forms: exact enumeration over finite
//! supports and multi-chain Metropolis sampling with convergence diagnostics.

mod diagnostics;
mod enumerate;
mod mcmc;

pub use diagnostics::{effective_sample_size, split_rhat};
pub use enumerate::{enumerate_discrete_pme, DiscreteSupport, ENUMERATION_LIMIT};
pub use mcmc::{
    mcmc_pme, McmcDiagnostics, McmcPrior, McmcResult, Proposal, SamplerConfig, DEFAULT_SAMPLER_EPS2,
};
