use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::report::SolverReport;
use crate::error::{Error, Result};
use crate::linalg::{canonicalize, check_rows, sym_pinv};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NuclearConfig {
    pub rho: f64,
    /// Both primal and dual residuals must fall below this.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for NuclearConfig {
    fn default() -> Self {
        NuclearConfig {
            rho: 1.0,
            tol: 1e-8,
            max_iter: 100_000,
        }
    }
}

fn to_matrix(v: &DVector<f64>, q: usize) -> DMatrix<f64> {
    DMatrix::from_row_slice(q, q, v.as_slice())
}

fn to_vector(m: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_iterator(m.len(), m.transpose().iter().cloned())
}

/// Singular value thresholding: `U · max(Σ − τ, 0) · Vᵀ`.
pub(crate) fn svt(m: &DMatrix<f64>, tau: f64) -> DMatrix<f64> {
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("requested U");
    let vt = svd.v_t.expect("requested Vᵀ");
    let shrunk = svd.singular_values.map(|s| (s - tau).max(0.0));
    u * DMatrix::from_diagonal(&shrunk) * vt
}

pub fn nuclear_norm(m: &DMatrix<f64>) -> f64 {
    m.singular_values().sum()
}

/// `min ‖W‖*  s.t.  ⟨Xᵢ, W⟩ = yᵢ` for `W ∈ R^{q×q}`, each row of `x` being a
/// row-major flattened `Xᵢ`.
pub fn nuclear_norm_min(x: &DMatrix<f64>, y: &DVector<f64>, q: usize) -> Result<SolverReport> {
    nuclear_norm_min_with(x, y, q, &NuclearConfig::default())
}

/// ADMM on `‖Z‖* + 𝟙{A(W) = y}` with the splitting `W = Z`, residual
/// balancing of `ρ`, and `Z` returned as the solution.
pub fn nuclear_norm_min_with(x: &DMatrix<f64>, y: &DVector<f64>, q: usize, config: &NuclearConfig) -> Result<SolverReport> {
    check_rows(x, y)?;
    if x.ncols() != q * q {
        return Err(Error::shape(format!(
            "design has {} columns, expected q² = {}",
            x.ncols(),
            q * q
        )));
    }
    if !(config.rho > 0.0) {
        return Err(Error::config("ADMM penalty ρ must be positive"));
    }
    let d = q * q;
    if x.nrows() == 0 {
        let mut rep = SolverReport::vector(vec![0.0; d]);
        rep.shape = (q, q);
        return Ok(rep);
    }
    let (a, y) = canonicalize(x, y);
    let gram_pinv = sym_pinv(&(&a * a.transpose())).inverse;
    let proj = a.transpose() * gram_pinv;
    let project = |v: &DVector<f64>| v - &proj * (&a * v - &y);

    let mut rho = config.rho;
    let mut z = DVector::zeros(d);
    let mut u = DVector::<f64>::zeros(d);
    let mut iterations = 0;
    let (mut primal, mut dual) = (f64::INFINITY, f64::INFINITY);
    while iterations < config.max_iter {
        iterations += 1;
        let w = project(&(&z - &u));
        let z_new = to_vector(&svt(&to_matrix(&(&w + &u), q), 1.0 / rho));
        u += &w - &z_new;
        primal = (&w - &z_new).norm();
        dual = rho * (&z_new - &z).norm();
        z = z_new;
        if primal <= config.tol && dual <= config.tol {
            break;
        }
        if primal > 10.0 * dual {
            rho *= 2.0;
            u /= 2.0;
        } else if dual > 10.0 * primal {
            rho /= 2.0;
            u *= 2.0;
        }
    }
    let zm = to_matrix(&z, q);
    Ok(SolverReport {
        objective: nuclear_norm(&zm),
        feasibility_residual: (&a * &z - &y).amax(),
        solution: z.iter().cloned().collect(),
        shape: (q, q),
        iterations,
        converged: primal <= config.tol && dual <= config.tol,
        certificate: primal.max(dual),
        trace: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn no_constraints_give_zero() {
        let rep = nuclear_norm_min(&DMatrix::zeros(0, 9), &DVector::zeros(0), 3).unwrap();
        assert_eq!(rep.solution, vec![0.0; 9]);
        assert_eq!(rep.shape, (3, 3));
    }

    #[test]
    fn single_entry_constraint() {
        // W₁₁ = 2: the minimizer is 2·e₁e₁ᵀ with nuclear norm 2.
        let mut x = DMatrix::zeros(1, 4);
        x[(0, 0)] = 1.0;
        let rep = nuclear_norm_min(&x, &DVector::from_vec(vec![2.0]), 2).unwrap();
        assert!(rep.converged);
        assert!((rep.objective - 2.0).abs() < 1e-7, "{}", rep.objective);
        assert!(rep.feasibility_residual < 1e-6);
    }

    #[test]
    fn trace_constraint_minimum() {
        // W₁₁ + W₂₂ = 2 has minimal nuclear norm 2, attained by any PSD
        // solution with trace 2.
        let x = DMatrix::from_row_slice(1, 4, &[1.0, 0.0, 0.0, 1.0]);
        let rep = nuclear_norm_min(&x, &DVector::from_vec(vec![2.0]), 2).unwrap();
        assert!((rep.objective - 2.0).abs() < 1e-6);
    }

    #[test]
    fn rejects_wrong_width() {
        assert!(nuclear_norm_min(&DMatrix::zeros(1, 5), &DVector::zeros(1), 2).is_err());
    }
}
