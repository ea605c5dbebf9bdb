//! Closed-form posterior-mean estimators for linear regression priors.
//!
//! * [`gaussian_pme`] / [`gaussian_log_evidence`]: Gaussian prior, possibly singular.
//! * [`mixture_pme`]: mixtures of Gaussian priors, combined by posterior weights β.
//! * [`dmmse_pme`]: uniform prior over a finite task set with Gaussian noise.
//! * [`ridge_pme`]: standard-normal prior with Gaussian noise.
//!
//! All estimators first sort the prompt pairs into a canonical order, so their
//! output is bit-identical under any permutation of the in-context examples.

mod discrete;
mod gaussian;
mod mixture;

pub use discrete::{dmmse_pme, DiscreteTaskSet};
pub use gaussian::{
    gaussian_log_evidence, gaussian_pme, gaussian_pme_noiseless, ridge_pme, GaussianPrior,
    DEFAULT_EVIDENCE_EPS2,
};
pub use mixture::{mixture_pme, MixturePosterior};
pub(crate) use mixture::validate_weights;
