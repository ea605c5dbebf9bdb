use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{canonicalize, check_rows, log_sum_exp};

/// A finite set of `K` weight vectors observed with Gaussian noise `σ²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteTaskSet {
    pub weights: Vec<Vec<f64>>,
    pub noise_var: f64,
}

impl DiscreteTaskSet {
    pub fn new(weights: Vec<Vec<f64>>, noise_var: f64) -> Result<Self> {
        let set = DiscreteTaskSet { weights, noise_var };
        set.validate()?;
        Ok(set)
    }

    pub fn validate(&self) -> Result<()> {
        if self.weights.is_empty() {
            return Err(Error::config("task set must contain at least one weight vector"));
        }
        if !(self.noise_var > 0.0) {
            return Err(Error::config(format!(
                "noise variance must be positive, got {}",
                self.noise_var
            )));
        }
        let d = self.weights[0].len();
        if d == 0 || self.weights.iter().any(|w| w.len() != d) {
            return Err(Error::shape("task weight vectors must share a nonzero dimension"));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.weights[0].len()
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Weight vectors as the rows of a `K x d` matrix.
    pub fn matrix(&self) -> DMatrix<f64> {
        let d = self.dim();
        DMatrix::from_fn(self.len(), d, |i, j| self.weights[i][j])
    }
}

/// Posterior mean under a uniform prior on the task set:
/// `Σⱼ softmaxⱼ(−‖y − Xwⱼ‖² / 2σ²) · wⱼ`.
pub fn dmmse_pme(tasks: &DiscreteTaskSet, x: &DMatrix<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
    tasks.validate()?;
    check_rows(x, y)?;
    if x.ncols() != tasks.dim() {
        return Err(Error::shape(format!(
            "design has {} columns, tasks have dimension {}",
            x.ncols(),
            tasks.dim()
        )));
    }
    dmmse_with_matrix(&tasks.matrix(), tasks.noise_var, x, y)
}

pub(crate) fn dmmse_with_matrix(
    w: &DMatrix<f64>,
    noise_var: f64,
    x: &DMatrix<f64>,
    y: &DVector<f64>,
) -> Result<DVector<f64>> {
    let (k_tasks, d) = w.shape();
    let logits: Vec<f64> = if x.nrows() == 0 {
        vec![0.0; k_tasks]
    } else {
        let (x, y) = canonicalize(x, y);
        // k x K predictions, one column per task
        let preds = &x * w.transpose();
        (0..k_tasks)
            .map(|j| {
                let sq: f64 = preds
                    .column(j)
                    .iter()
                    .zip(y.iter())
                    .map(|(p, t)| (t - p) * (t - p))
                    .sum();
                -sq / (2.0 * noise_var)
            })
            .collect()
    };
    let lse = log_sum_exp(&logits);
    if !lse.is_finite() {
        return Err(Error::Numeric(format!("dMMSE log normalizer is {lse}")));
    }
    let mut out = DVector::zeros(d);
    for (j, l) in logits.iter().enumerate() {
        let p = (l - lse).exp();
        if p > 0.0 {
            out.axpy(p, &w.row(j).transpose(), 1.0);
        }
    }
    Ok(out)
}
