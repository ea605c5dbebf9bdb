use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::family::FunctionInstance;
use crate::error::{Error, Result};

/// A sampled prompt: `p` context pairs plus held-out query inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prompt {
    pub id: u64,
    pub xs: Vec<Vec<f64>>,
    pub ys: Vec<f64>,
    pub query_xs: Vec<Vec<f64>>,
    pub family_id: usize,
    pub function_params: FunctionInstance,
    pub seed: u64,
}

impl Prompt {
    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.xs
            .first()
            .or(self.query_xs.first())
            .map_or(0, Vec::len)
    }

    /// The first `k` pairs as a design matrix and target vector.
    pub fn prefix(&self, k: usize) -> Result<(DMatrix<f64>, DVector<f64>)> {
        if k > self.len() {
            return Err(Error::shape(format!(
                "prefix of length {k} requested from a prompt with {} pairs",
                self.len()
            )));
        }
        let d = self.dim();
        let x = crate::linalg::design_matrix(&self.xs[..k], d)?;
        Ok((x, DVector::from_column_slice(&self.ys[..k])))
    }

    /// Noiseless ground-truth values at an input.
    pub fn truth(&self, x: &[f64]) -> f64 {
        self.function_params.eval(x)
    }

    pub fn validate(&self) -> Result<()> {
        if self.xs.len() != self.ys.len() {
            return Err(Error::shape(format!(
                "prompt {} has {} inputs and {} outputs",
                self.id,
                self.xs.len(),
                self.ys.len()
            )));
        }
        let d = self.dim();
        if self.xs.iter().chain(&self.query_xs).any(|x| x.len() != d) {
            return Err(Error::shape(format!("prompt {} mixes input dimensions", self.id)));
        }
        Ok(())
    }
}
