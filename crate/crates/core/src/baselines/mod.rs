//! Non-Bayesian baselines: least squares, sparse and structured norm
//! minimization, greedy trees and a gradient-trained MLP.

mod lasso;
mod linf;
mod mlp;
mod nuclear;
mod ols;
mod report;
mod simplex;
mod tree;

pub use lasso::{
    lasso, lasso_kkt_violation, lasso_tune, lasso_with, LassoConfig, TuneResult, TuningBatch,
    LASSO_ALPHA_MONOMIAL, LASSO_ALPHA_MULTITASK,
};
pub use linf::linf_min;
pub use mlp::{mlp_fit, Mlp, MlpConfig, MlpFit};
pub use nuclear::{nuclear_norm, nuclear_norm_min, nuclear_norm_min_with, NuclearConfig};
pub use ols::{ols_min_norm, ols_on_features};
pub use report::SolverReport;
pub use tree::{greedy_tree_fit, TreeModel};
