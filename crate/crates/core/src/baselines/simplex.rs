//! Dense two-phase primal simplex for `min cᵀx  s.t.  Ax = b, x ≥ 0`.
//!
//! Bland's rule picks both the entering and the leaving variable, which rules
//! out cycling on the heavily degenerate problems produced by norm
//! minimization.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

const PIVOT_TOL: f64 = 1e-10;
const COST_TOL: f64 = 1e-11;
const MAX_PIVOTS: usize = 200_000;

#[derive(Debug, Clone)]
pub(crate) struct LpSolution {
    pub x: DVector<f64>,
    pub objective: f64,
    pub iterations: usize,
    /// `max(|primal − dual|, dual infeasibility)` from the final basis.
    pub certificate: f64,
}

struct Tableau {
    rows: Vec<Vec<f64>>,
    cost: Vec<f64>,
    basis: Vec<usize>,
    width: usize,
}

impl Tableau {
    fn rhs(&self) -> usize {
        self.width
    }

    fn pivot(&mut self, r: usize, col: usize) {
        let p = self.rows[r][col];
        for v in self.rows[r].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[col];
            if f != 0.0 {
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
                row[col] = 0.0;
            }
        }
        let f = self.cost[col];
        if f != 0.0 {
            for (v, pv) in self.cost.iter_mut().zip(&pivot_row) {
                *v -= f * pv;
            }
            self.cost[col] = 0.0;
        }
        self.basis[r] = col;
    }

    fn price(&mut self, c: &[f64]) {
        let rhs = self.rhs();
        self.cost = vec![0.0; rhs + 1];
        self.cost[..c.len()].copy_from_slice(c);
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = c.get(b).copied().unwrap_or(0.0);
            if cb != 0.0 {
                for (v, t) in self.cost.iter_mut().zip(&self.rows[i]) {
                    *v -= cb * t;
                }
            }
        }
    }

    /// Runs Bland-rule pivots over columns `< n_allowed` until optimal.
    fn optimize(&mut self, n_allowed: usize, pivots: &mut usize) -> Result<()> {
        let rhs = self.rhs();
        loop {
            let Some(col) = (0..n_allowed).find(|&j| self.cost[j] < -COST_TOL) else {
                return Ok(());
            };
            let mut leave: Option<(usize, f64)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                if row[col] > PIVOT_TOL {
                    let ratio = row[rhs].max(0.0) / row[col];
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((li, lr)) => {
                            let tie = (ratio - lr).abs() <= 1e-12 * (1.0 + lr.abs());
                            if ratio < lr && !tie || tie && self.basis[i] < self.basis[li] {
                                Some((i, ratio))
                            } else {
                                Some((li, lr))
                            }
                        }
                    };
                }
            }
            let Some((r, _)) = leave else {
                return Err(Error::Numeric("linear program is unbounded".into()));
            };
            self.pivot(r, col);
            *pivots += 1;
            if *pivots > MAX_PIVOTS {
                return Err(Error::Numeric(format!("simplex exceeded {MAX_PIVOTS} pivots")));
            }
        }
    }
}

pub(crate) fn solve(a: &DMatrix<f64>, b: &DVector<f64>, c: &DVector<f64>, feas_tol: f64) -> Result<LpSolution> {
    let (m, n) = a.shape();
    // Flip rows so that b ≥ 0.
    let mut a = a.clone();
    let mut b = b.clone();
    for i in 0..m {
        if b[i] < 0.0 {
            b[i] = -b[i];
            for j in 0..n {
                a[(i, j)] = -a[(i, j)];
            }
        }
    }
    let width = n + m;
    let rows = (0..m)
        .map(|i| {
            let mut row = vec![0.0; width + 1];
            for j in 0..n {
                row[j] = a[(i, j)];
            }
            row[n + i] = 1.0;
            row[width] = b[i];
            row
        })
        .collect();
    let mut t = Tableau {
        rows,
        cost: Vec::new(),
        basis: (n..n + m).collect(),
        width,
    };
    let mut pivots = 0;

    let phase_one_cost: Vec<f64> = (0..width).map(|j| if j >= n { 1.0 } else { 0.0 }).collect();
    t.price(&phase_one_cost);
    t.optimize(n, &mut pivots)?;
    let residual: f64 = t
        .basis
        .iter()
        .zip(&t.rows)
        .filter(|(bv, _)| **bv >= n)
        .map(|(_, row)| row[width].abs())
        .sum();
    if residual > feas_tol {
        return Err(Error::Infeasible { residual });
    }

    // Drive remaining artificials out of the basis; rows where that is
    // impossible are linearly dependent and get dropped.
    let mut keep = vec![true; m];
    for r in 0..m {
        if t.basis[r] >= n {
            match (0..n).find(|&j| t.rows[r][j].abs() > 1e-9) {
                Some(j) => {
                    t.pivot(r, j);
                    pivots += 1;
                }
                None => keep[r] = false,
            }
        }
    }
    let kept: Vec<usize> = (0..m).filter(|&r| keep[r]).collect();
    t.rows = kept.iter().map(|&r| t.rows[r].clone()).collect();
    t.basis = kept.iter().map(|&r| t.basis[r]).collect();

    let c_vec: Vec<f64> = c.iter().cloned().collect();
    t.price(&c_vec);
    t.optimize(n, &mut pivots)?;

    let mut x = DVector::zeros(n);
    for (row, &bv) in t.rows.iter().zip(&t.basis) {
        x[bv] = row[width].max(0.0);
    }
    let objective = c.dot(&x);

    let certificate = dual_certificate(&a, &b, c, &kept, &t.basis, objective);
    Ok(LpSolution {
        x,
        objective,
        iterations: pivots,
        certificate,
    })
}

/// Solves `Bᵀπ = c_B` on the original columns and measures the duality gap
/// and the most negative reduced cost.
fn dual_certificate(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    c: &DVector<f64>,
    rows: &[usize],
    basis: &[usize],
    primal: f64,
) -> f64 {
    let m = rows.len();
    if m == 0 {
        let dual_infeas = c.iter().fold(0.0f64, |acc, v| acc.max(-v));
        return primal.abs().max(dual_infeas);
    }
    let a_r = a.select_rows(rows);
    let b_r = DVector::from_iterator(m, rows.iter().map(|&i| b[i]));
    let bmat = DMatrix::from_fn(m, m, |i, j| a_r[(i, basis[j])]);
    let cb = DVector::from_iterator(m, basis.iter().map(|&j| c[j]));
    let Some(pi) = bmat.transpose().lu().solve(&cb) else {
        return f64::INFINITY;
    };
    let reduced = c - a_r.transpose() * &pi;
    let dual_infeas = reduced.iter().fold(0.0f64, |acc, v| acc.max(-v));
    (primal - pi.dot(&b_r)).abs().max(dual_infeas)
}
