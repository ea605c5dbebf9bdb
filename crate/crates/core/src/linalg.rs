//! Dense linear-algebra helpers shared by the estimators.

use std::cmp::Ordering;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative eigenvalue cutoff for symmetric pseudo-inverses.
pub const SYM_PINV_RCOND: f64 = 1e-12;

/// Stacks input vectors as the rows of a `k x d` design matrix.
pub fn design_matrix(xs: &[Vec<f64>], d: usize) -> Result<DMatrix<f64>> {
    if let Some((i, row)) = xs.iter().enumerate().find(|(_, r)| r.len() != d) {
        return Err(Error::shape(format!(
            "input {i} has dimension {}, expected {d}",
            row.len()
        )));
    }
    Ok(DMatrix::from_fn(xs.len(), d, |i, j| xs[i][j]))
}

pub fn check_rows(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<()> {
    if x.nrows() != y.len() {
        return Err(Error::shape(format!(
            "design has {} rows but {} targets",
            x.nrows(),
            y.len()
        )));
    }
    Ok(())
}

/// Pseudo-inverse of a symmetric PSD matrix via its eigendecomposition.
#[derive(Debug, Clone)]
pub struct SymPinv {
    pub inverse: DMatrix<f64>,
    /// Sum of `ln λ` over the retained eigenvalues.
    pub log_det: f64,
    pub rank: usize,
}

pub fn sym_pinv(m: &DMatrix<f64>) -> SymPinv {
    let n = m.nrows();
    if n == 0 {
        return SymPinv {
            inverse: DMatrix::zeros(0, 0),
            log_det: 0.0,
            rank: 0,
        };
    }
    let sym = (m + m.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let lmax = eig.eigenvalues.iter().cloned().fold(0.0_f64, f64::max);
    let cutoff = SYM_PINV_RCOND * lmax;
    let mut inv_diag = DVector::zeros(n);
    let mut log_det = 0.0;
    let mut rank = 0;
    for (i, &l) in eig.eigenvalues.iter().enumerate() {
        if l > cutoff && l > 0.0 {
            inv_diag[i] = 1.0 / l;
            log_det += l.ln();
            rank += 1;
        }
    }
    let v = &eig.eigenvectors;
    let inverse = v * DMatrix::from_diagonal(&inv_diag) * v.transpose();
    SymPinv {
        inverse,
        log_det,
        rank,
    }
}

/// A factor `L` with `L Lᵀ = Σ` for a symmetric PSD `Σ`; negative eigenvalues
/// are clamped to zero.
pub fn psd_factor(sigma: &DMatrix<f64>) -> DMatrix<f64> {
    let sym = (sigma + sigma.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    &eig.eigenvectors * DMatrix::from_diagonal(&roots)
}

/// Thin singular value decomposition `a = U diag(s) Vᵀ` with `min(m, n)` columns
/// in `U` and `V`. Columns paired with an exactly zero singular value may be zero.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: DMatrix<f64>,
    pub s: DVector<f64>,
    pub v: DMatrix<f64>,
}

impl Svd {
    pub fn max(&self) -> f64 {
        self.s.iter().cloned().fold(0.0, f64::max)
    }
}

const JACOBI_MAX_SWEEPS: usize = 80;

/// QR-preconditioned one-sided Jacobi SVD. Small singular values come out with
/// high relative accuracy, which the bidiagonal QR iteration does not always
/// deliver on ill-conditioned designs.
pub fn svd(a: &DMatrix<f64>) -> Svd {
    let (m, n) = a.shape();
    if m < n {
        let t = svd(&a.transpose());
        return Svd { u: t.v, s: t.s, v: t.u };
    }
    if n == 0 {
        return Svd {
            u: DMatrix::zeros(m, 0),
            s: DVector::zeros(0),
            v: DMatrix::zeros(0, 0),
        };
    }
    // Columns in decreasing norm order, then A P = Q R and Rᵀ = Uₓ Σ Vₓᵀ.
    let norms: Vec<f64> = (0..n).map(|j| a.column(j).norm_squared()).collect();
    let mut perm: Vec<usize> = (0..n).collect();
    perm.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]).then(i.cmp(&j)));
    let qr = a.select_columns(perm.iter()).qr();
    let (q, r) = (qr.q(), qr.r());
    let (ux, s, vx) = jacobi(r.transpose());
    let mut v = DMatrix::zeros(n, n);
    for (j, &pj) in perm.iter().enumerate() {
        v.row_mut(pj).copy_from(&ux.row(j));
    }
    Svd { u: q * vx, s, v }
}

/// One-sided Jacobi on the columns of a square `x`: returns `(U, s, V)` with
/// `x V = U diag(s)`.
fn jacobi(mut x: DMatrix<f64>) -> (DMatrix<f64>, DVector<f64>, DMatrix<f64>) {
    let (m, n) = x.shape();
    let mut v = DMatrix::<f64>::identity(n, n);
    let xd = x.as_mut_slice();
    let vd = v.as_mut_slice();
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let (cp, cq) = column_pair(xd, m, p, q);
                let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, 0.0);
                for (a, b) in cp.iter().zip(cq.iter()) {
                    alpha += a * a;
                    beta += b * b;
                    gamma += a * b;
                }
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let sn = c * t;
                rotate(cp, cq, c, sn);
                let (vp, vq) = column_pair(vd, n, p, q);
                rotate(vp, vq, c, sn);
            }
        }
        if !rotated {
            break;
        }
    }
    let mut s = DVector::zeros(n);
    for j in 0..n {
        let norm = x.column(j).norm();
        s[j] = norm;
        if norm > 0.0 {
            x.column_mut(j).unscale_mut(norm);
        }
    }
    (x, s, v)
}

fn column_pair(data: &mut [f64], rows: usize, p: usize, q: usize) -> (&mut [f64], &mut [f64]) {
    let (head, tail) = data.split_at_mut(q * rows);
    (&mut head[p * rows..(p + 1) * rows], &mut tail[..rows])
}

fn rotate(xp: &mut [f64], xq: &mut [f64], c: f64, s: f64) {
    for (a, b) in xp.iter_mut().zip(xq.iter_mut()) {
        let (ap, aq) = (*a, *b);
        *a = c * ap - s * aq;
        *b = s * ap + c * aq;
    }
}

/// Minimum-norm least-squares solution of `a w ≈ b`.
///
/// Singular values below `max(m, n) · ε · σ_max` are treated as zero.
pub fn lstsq_min_norm(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let (m, n) = a.shape();
    if m == 0 || n == 0 {
        return DVector::zeros(n);
    }
    let svd = svd(a);
    let cutoff = (m.max(n) as f64) * f64::EPSILON * svd.max();
    let utb = svd.u.transpose() * b;
    let coeffs = DVector::from_fn(svd.s.len(), |i, _| if svd.s[i] > cutoff { utb[i] / svd.s[i] } else { 0.0 });
    svd.v * coeffs
}

/// Row order that sorts `(xᵢ, yᵢ)` pairs by the total order of their bit
/// patterns. Reordering by it makes order-independent estimators bit-identical
/// under any permutation of the input pairs.
pub fn canonical_order(x: &DMatrix<f64>, y: &DVector<f64>) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..x.nrows()).collect();
    idx.sort_by(|&a, &b| {
        for j in 0..x.ncols() {
            match x[(a, j)].total_cmp(&x[(b, j)]) {
                Ordering::Equal => continue,
                other => return other,
            }
        }
        y[a].total_cmp(&y[b])
    });
    idx
}

pub fn canonicalize(x: &DMatrix<f64>, y: &DVector<f64>) -> (DMatrix<f64>, DVector<f64>) {
    let order = canonical_order(x, y);
    let xs = x.select_rows(order.iter());
    let ys = DVector::from_iterator(order.len(), order.iter().map(|&i| y[i]));
    (xs, ys)
}

/// Numerically stable `ln Σ exp(vᵢ)`.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let m = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if m == f64::INFINITY {
        return f64::INFINITY;
    }
    m + values.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

pub fn variance(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(values);
    values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1) as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn min_norm_underdetermined() {
        let a = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
        let b = DVector::from_vec(vec![2.0]);
        let w = lstsq_min_norm(&a, &b);
        assert!((w[0] - 1.0).abs() < 1e-14 && (w[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn jacobi_svd_reconstructs_ill_conditioned() {
        let a = DMatrix::from_fn(9, 7, |i, j| 1.0 / (i + j + 1) as f64);
        for m in [a.clone(), a.transpose()] {
            let f = svd(&m);
            let back = &f.u * DMatrix::from_diagonal(&f.s) * f.v.transpose();
            assert!((back - &m).amax() < 1e-14);
            assert!((f.v.transpose() * &f.v - DMatrix::identity(7, 7)).amax() < 1e-13);
            assert!((f.u.transpose() * &f.u - DMatrix::identity(7, 7)).amax() < 1e-13);
        }
    }

    #[test]
    fn empty_system_gives_zero() {
        let a = DMatrix::<f64>::zeros(0, 3);
        let b = DVector::<f64>::zeros(0);
        assert_eq!(lstsq_min_norm(&a, &b), DVector::zeros(3));
    }

    #[test]
    fn pinv_of_singular_matrix() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![0.0, 2.0, 4.0]));
        let p = sym_pinv(&m);
        assert_eq!(p.rank, 2);
        assert!((p.inverse[(1, 1)] - 0.5).abs() < 1e-15);
        assert_eq!(p.inverse[(0, 0)], 0.0);
        assert!((p.log_det - 8.0_f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn psd_factor_reconstructs() {
        let s = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let l = psd_factor(&s);
        assert!((&l * l.transpose() - s).amax() < 1e-12);
    }

    #[test]
    fn log_sum_exp_handles_extremes() {
        assert!((log_sum_exp(&[-1000.0, -1000.0]) - (-1000.0 + 2f64.ln())).abs() < 1e-12);
        assert_eq!(log_sum_exp(&[f64::NEG_INFINITY]), f64::NEG_INFINITY);
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
    }

    #[test]
    fn canonical_order_is_permutation_free() {
        let x = DMatrix::from_row_slice(3, 1, &[3.0, 1.0, 2.0]);
        let y = DVector::from_vec(vec![30.0, 10.0, 20.0]);
        let (xs, ys) = canonicalize(&x, &y);
        assert_eq!(xs.as_slice(), &[1.0, 2.0, 3.0]);
        assert_eq!(ys.as_slice(), &[10.0, 20.0, 30.0]);
    }
}
