use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::report::SolverReport;
use crate::error::{Error, Result};
use crate::linalg::{canonicalize, check_rows};

/// Penalty used for the multi-task monomial and Fourier suites.
pub const LASSO_ALPHA_MULTITASK: f64 = 0.1;
/// Penalty used for the single-family monomial task.
pub const LASSO_ALPHA_MONOMIAL: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LassoConfig {
    /// Stop once the largest coordinate update of a sweep falls below this.
    pub tol: f64,
    pub max_sweeps: usize,
    /// Largest KKT violation accepted as converged.
    pub kkt_tol: f64,
    pub record_trace: bool,
}

impl Default for LassoConfig {
    fn default() -> Self {
        LassoConfig {
            tol: 1e-10,
            max_sweeps: 100_000,
            kkt_tol: 1e-6,
            record_trace: false,
        }
    }
}

fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

fn objective(r: &DVector<f64>, w: &DVector<f64>, alpha: f64) -> f64 {
    0.5 * r.norm_squared() + alpha * w.lp_norm(1)
}

/// Largest violation of the optimality conditions of `½‖y − Xw‖² + α‖w‖₁`.
pub fn lasso_kkt_violation(x: &DMatrix<f64>, y: &DVector<f64>, w: &DVector<f64>, alpha: f64) -> f64 {
    let g = x.transpose() * (y - x * w);
    g.iter()
        .zip(w.iter())
        .map(|(gj, wj)| {
            if *wj == 0.0 {
                (gj.abs() - alpha).max(0.0)
            } else {
                (gj - alpha * wj.signum()).abs()
            }
        })
        .fold(0.0, f64::max)
}

/// Cyclic coordinate descent on `½‖y − Xw‖² + α‖w‖₁`.
pub fn lasso(x: &DMatrix<f64>, y: &DVector<f64>, alpha: f64) -> Result<SolverReport> {
    lasso_with(x, y, alpha, &LassoConfig::default())
}

pub fn lasso_with(x: &DMatrix<f64>, y: &DVector<f64>, alpha: f64, config: &LassoConfig) -> Result<SolverReport> {
    check_rows(x, y)?;
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return Err(Error::config(format!("Lasso penalty must be finite and nonnegative, got {alpha}")));
    }
    let (x, y) = canonicalize(x, y);
    let d = x.ncols();
    let col_sq: Vec<f64> = (0..d).map(|j| x.column(j).norm_squared()).collect();
    let mut w = DVector::<f64>::zeros(d);
    let mut r = y.clone();
    let mut trace = Vec::new();
    let mut sweeps = 0;
    let mut settled = d == 0 || x.nrows() == 0;
    while !settled && sweeps < config.max_sweeps {
        sweeps += 1;
        let mut max_update: f64 = 0.0;
        for j in 0..d {
            if col_sq[j] == 0.0 {
                continue;
            }
            let xj = x.column(j);
            let old = w[j];
            let rho = xj.dot(&r) + col_sq[j] * old;
            let new = soft_threshold(rho, alpha) / col_sq[j];
            let delta = new - old;
            if delta != 0.0 {
                r.axpy(-delta, &xj, 1.0);
                w[j] = new;
                max_update = max_update.max(delta.abs());
            }
        }
        if config.record_trace {
            trace.push(objective(&r, &w, alpha));
        }
        settled = max_update < config.tol;
    }
    // Recompute the residual from scratch to remove drift.
    let r = &y - &x * &w;
    let certificate = lasso_kkt_violation(&x, &y, &w, alpha);
    Ok(SolverReport {
        objective: objective(&r, &w, alpha),
        feasibility_residual: r.amax(),
        solution: w.iter().cloned().collect(),
        shape: (d, 1),
        iterations: sweeps,
        converged: settled && certificate <= config.kkt_tol,
        certificate,
        trace,
    })
}

/// One held-out tuning problem: fit on `(x_fit, y_fit)`, score on `(x_eval, y_eval)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TuningBatch {
    pub x_fit: DMatrix<f64>,
    pub y_fit: DVector<f64>,
    pub x_eval: DMatrix<f64>,
    pub y_eval: DVector<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneResult {
    pub alpha: f64,
    /// Mean squared prediction error on the tuning batches, aligned with the grid.
    pub losses: Vec<f64>,
}

/// Picks the grid value with the smallest mean squared prediction error over
/// the tuning batches; ties go to the earlier grid entry.
pub fn lasso_tune(batches: &[TuningBatch], grid: &[f64]) -> Result<TuneResult> {
    if grid.is_empty() {
        return Err(Error::config("Lasso tuning grid is empty"));
    }
    if batches.is_empty() {
        return Err(Error::config("Lasso tuning needs at least one batch"));
    }
    let mut losses = Vec::with_capacity(grid.len());
    for &alpha in grid {
        let mut total = 0.0;
        let mut count = 0usize;
        for b in batches {
            let rep = lasso(&b.x_fit, &b.y_fit, alpha)?;
            let w = DVector::from_column_slice(&rep.solution);
            let err = &b.x_eval * w - &b.y_eval;
            total += err.norm_squared();
            count += err.len();
        }
        losses.push(total / count.max(1) as f64);
    }
    let best = losses
        .iter()
        .enumerate()
        .fold(0, |best, (i, l)| if *l < losses[best] { i } else { best });
    Ok(TuneResult {
        alpha: grid[best],
        losses,
    })
}
