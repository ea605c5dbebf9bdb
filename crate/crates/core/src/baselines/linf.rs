use nalgebra::{DMatrix, DVector};

use super::report::SolverReport;
use super::simplex;
use crate::error::Result;
use crate::linalg::{canonicalize, check_rows};

/// `min ‖w‖∞  s.t.  Xw = y`, solved as a linear program.
///
/// With `t = ‖w‖∞` and `v = w + t·1`, the problem becomes
/// `min t` over `v, s, t ≥ 0` with `Xv − (X1)t = y` and `vᵢ + sᵢ − 2t = 0`.
/// The certificate is the duality gap of the final basis.
pub fn linf_min(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<SolverReport> {
    check_rows(x, y)?;
    let (k, d) = x.shape();
    if k == 0 {
        return Ok(SolverReport::vector(vec![0.0; d]));
    }
    let (x, y) = canonicalize(x, y);
    let n = 2 * d + 1;
    let t_col = 2 * d;
    let mut a = DMatrix::zeros(k + d, n);
    let mut b = DVector::zeros(k + d);
    for i in 0..k {
        let mut row_sum = 0.0;
        for j in 0..d {
            a[(i, j)] = x[(i, j)];
            row_sum += x[(i, j)];
        }
        a[(i, t_col)] = -row_sum;
        b[i] = y[i];
    }
    for j in 0..d {
        a[(k + j, j)] = 1.0;
        a[(k + j, d + j)] = 1.0;
        a[(k + j, t_col)] = -2.0;
    }
    let mut c = DVector::zeros(n);
    c[t_col] = 1.0;
    let feas_tol = 1e-9 * y.amax().max(1.0) * k as f64;
    let sol = simplex::solve(&a, &b, &c, feas_tol)?;
    let t = sol.x[t_col];
    let w = DVector::from_fn(d, |j, _| sol.x[j] - t);
    let residual = (&x * &w - &y).amax();
    Ok(SolverReport {
        solution: w.iter().cloned().collect(),
        shape: (d, 1),
        objective: sol.objective,
        feasibility_residual: residual,
        iterations: sol.iterations,
        converged: sol.certificate <= 1e-8,
        certificate: sol.certificate,
        trace: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    #[test]
    fn empty_prompt_gives_zero() {
        let rep = linf_min(&DMatrix::zeros(0, 3), &DVector::zeros(0)).unwrap();
        assert_eq!(rep.solution, vec![0.0; 3]);
        assert_eq!(rep.objective, 0.0);
    }

    #[test]
    fn symmetric_constraint() {
        let x = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
        let rep = linf_min(&x, &DVector::from_vec(vec![2.0])).unwrap();
        assert!((rep.solution[0] - 1.0).abs() < 1e-12 && (rep.solution[1] - 1.0).abs() < 1e-12);
        assert!((rep.objective - 1.0).abs() < 1e-12);
        assert!(rep.converged);
    }

    #[test]
    fn negative_targets() {
        let x = DMatrix::from_row_slice(1, 3, &[1.0, -2.0, 1.0]);
        let rep = linf_min(&x, &DVector::from_vec(vec![-8.0])).unwrap();
        assert!((rep.objective - 2.0).abs() < 1e-12, "{:?}", rep.solution);
        assert!(rep.feasibility_residual < 1e-12);
    }

    #[test]
    fn inconsistent_system_is_infeasible() {
        let x = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 1.0, 0.0]);
        let y = DVector::from_vec(vec![1.0, 2.0]);
        assert!(matches!(linf_min(&x, &y), Err(Error::Infeasible { .. })));
    }
}
