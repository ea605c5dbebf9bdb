use nalgebra::{DMatrix, DVector};

use super::report::SolverReport;
use crate::error::Result;
use crate::linalg::{canonicalize, check_rows, lstsq_min_norm};
use crate::tasks::FeatureMap;

/// Minimum-norm least squares via SVD.
///
/// `objective` is `‖Xw − y‖²`; `certificate` is the normal-equation residual
/// `‖Xᵀ(Xw − y)‖∞`.
pub fn ols_min_norm(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<SolverReport> {
    check_rows(x, y)?;
    let (x, y) = canonicalize(x, y);
    let w = lstsq_min_norm(&x, &y);
    let r = &x * &w - &y;
    let mut report = SolverReport::vector(w.iter().cloned().collect());
    report.objective = r.norm_squared();
    report.feasibility_residual = r.amax();
    report.certificate = if x.nrows() == 0 { 0.0 } else { (x.transpose() * &r).amax() };
    report.iterations = 1;
    Ok(report)
}

/// [`ols_min_norm`] on the feature-expanded design `Φ(X)`.
pub fn ols_on_features(map: &FeatureMap, xs: &[Vec<f64>], y: &DVector<f64>) -> Result<SolverReport> {
    map.validate()?;
    let phi = map.design(xs)?;
    ols_min_norm(&phi, y)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_system_is_solved_exactly() {
        let x = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 3.0]);
        let y = DVector::from_vec(vec![3.0, 5.0]);
        let rep = ols_min_norm(&x, &y).unwrap();
        assert!(rep.feasibility_residual <= 1e-10);
        assert!((rep.solution[0] - 0.8).abs() < 1e-12 && (rep.solution[1] - 1.4).abs() < 1e-12);
    }

    #[test]
    fn single_row_min_norm() {
        let x = DMatrix::from_row_slice(1, 2, &[1.0, 0.0]);
        let rep = ols_min_norm(&x, &DVector::from_vec(vec![2.0])).unwrap();
        assert_eq!(rep.solution, vec![2.0, 0.0]);
    }

    #[test]
    fn determined_fourier_fit_has_zero_residual() {
        let map = FeatureMap::Fourier { max_freq: 10, half_width: 5.0 };
        let xs: Vec<Vec<f64>> = (0..21).map(|i| vec![-5.0 + 10.0 * (i as f64 + 0.3) / 21.0]).collect();
        let w: Vec<f64> = (0..21).map(|i| (i as f64 * 0.37).sin()).collect();
        let y = DVector::from_iterator(21, xs.iter().map(|x| map.apply(x).iter().zip(&w).map(|(a, b)| a * b).sum()));
        let rep = ols_on_features(&map, &xs, &y).unwrap();
        assert!(rep.feasibility_residual < 1e-9);
    }
}
