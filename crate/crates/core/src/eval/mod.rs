//! Loss curves with bootstrap bands, predictor comparison, multi-task
//! generalization suites, checkpoint sweeps and CSV/SVG export.

mod curve;
mod export;
mod suite;
mod sweep;

pub use curve::{
    bootstrap_band, compare_predictors, curve_from_losses, loss_at_k, squared_errors, BootstrapConfig, EvalCurve,
    DEFAULT_BOOTSTRAP, DEFAULT_CI_LEVEL, DEFAULT_PROMPTS,
};
pub use export::{curve_rows, read_curves_csv, render_svg, write_curves_csv, write_svg, CurveRow, SvgOptions, CSV_HEADER};
pub use suite::{binomial, build_multitask_suite, MultiTaskSuite, SuiteConfig, SuiteKind};
pub use sweep::{checkpoint_sweep, moving_average, CheckpointDump, ForgettingReport};
