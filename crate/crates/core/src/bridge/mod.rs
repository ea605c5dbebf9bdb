//! The predictor contract shared by closed-form estimators, baseline solvers,
//! samplers, stored prediction files and external processes.
//!
//! External processes speak newline-delimited JSON on their standard streams:
//! each request `{"id", "xs", "ys", "query"}` is answered by one line
//! `{"id", "prediction"}` (or `{"id", "error"}`), one request at a time.

mod batch;
mod builtin;
mod file;
mod handle;
mod record;
mod subprocess;

pub use batch::{run_batch, BatchOutput, QueryMode};
pub use builtin::{BuiltinPredictor, Fitted, PredictorSpec};
pub use file::PredictionFile;
pub use handle::{Concurrency, Context, FnPredictor, Mode, Predictor};
pub use record::{read_records, write_failures, write_records, Failure, PredictionRecord};
pub use subprocess::{Request, Response, SubprocessPredictor, DEFAULT_TIMEOUT};
