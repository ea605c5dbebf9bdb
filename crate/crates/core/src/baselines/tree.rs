use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Regression tree fitted by greedy variance reduction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "kebab-case")]
pub enum TreeModel {
    Leaf {
        value: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: Box<TreeModel>,
        right: Box<TreeModel>,
    },
}

impl TreeModel {
    /// `x[feature] ≤ threshold` goes left.
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut node = self;
        loop {
            match node {
                TreeModel::Leaf { value } => return *value,
                TreeModel::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => node = if x[*feature] <= *threshold { left } else { right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            TreeModel::Leaf { .. } => 0,
            TreeModel::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }
}

/// Fits a tree of at most `depth` levels. Each split is the (feature,
/// midpoint) pair with the largest reduction in squared error; leaves predict
/// the mean of their targets. Empty data gives the zero predictor.
pub fn greedy_tree_fit(xs: &[Vec<f64>], ys: &[f64], depth: usize) -> Result<TreeModel> {
    if depth == 0 {
        return Err(Error::config("tree depth must be at least 1"));
    }
    if xs.len() != ys.len() {
        return Err(Error::shape(format!("{} inputs and {} targets", xs.len(), ys.len())));
    }
    if xs.is_empty() {
        return Ok(TreeModel::Leaf { value: 0.0 });
    }
    let d = xs[0].len();
    if xs.iter().any(|x| x.len() != d) {
        return Err(Error::shape("tree inputs have mixed dimensions"));
    }
    let idx: Vec<usize> = (0..xs.len()).collect();
    Ok(grow(xs, ys, idx, depth))
}

fn sse(sum: f64, sum_sq: f64, n: f64) -> f64 {
    (sum_sq - sum * sum / n).max(0.0)
}

fn grow(xs: &[Vec<f64>], ys: &[f64], idx: Vec<usize>, depth: usize) -> TreeModel {
    let n = idx.len() as f64;
    let total: f64 = idx.iter().map(|&i| ys[i]).sum();
    let mean = total / n;
    if depth == 0 || idx.len() < 2 {
        return TreeModel::Leaf { value: mean };
    }
    let total_sq: f64 = idx.iter().map(|&i| ys[i] * ys[i]).sum();
    let parent = sse(total, total_sq, n);
    let mut best: Option<(f64, usize, f64)> = None;
    let d = xs[idx[0]].len();
    for j in 0..d {
        let mut order = idx.clone();
        order.sort_by(|&a, &b| xs[a][j].total_cmp(&xs[b][j]).then(a.cmp(&b)));
        let (mut ls, mut lsq) = (0.0, 0.0);
        for pos in 0..order.len() - 1 {
            let yi = ys[order[pos]];
            ls += yi;
            lsq += yi * yi;
            let (lo, hi) = (xs[order[pos]][j], xs[order[pos + 1]][j]);
            if lo == hi {
                continue;
            }
            let nl = (pos + 1) as f64;
            let gain = parent - sse(ls, lsq, nl) - sse(total - ls, total_sq - lsq, n - nl);
            if best.is_none_or(|(g, _, _)| gain > g) {
                best = Some((gain, j, lo + (hi - lo) / 2.0));
            }
        }
    }
    match best {
        Some((gain, feature, threshold)) if gain > 1e-12 * parent.max(f64::MIN_POSITIVE) => {
            let (l, r): (Vec<usize>, Vec<usize>) = idx.into_iter().partition(|&i| xs[i][feature] <= threshold);
            TreeModel::Split {
                feature,
                threshold,
                left: Box::new(grow(xs, ys, l, depth - 1)),
                right: Box::new(grow(xs, ys, r, depth - 1)),
            }
        }
        _ => TreeModel::Leaf { value: mean },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_data_gives_zero() {
        assert_eq!(greedy_tree_fit(&[], &[], 3).unwrap().predict(&[1.0]), 0.0);
    }

    #[test]
    fn single_sample_predicts_its_target() {
        let t = greedy_tree_fit(&[vec![0.3, -1.0]], &[4.5], 4).unwrap();
        assert_eq!(t.predict(&[9.0, 9.0]), 4.5);
    }

    #[test]
    fn constant_targets_give_constant_tree() {
        let xs: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
        let t = greedy_tree_fit(&xs, &[2.0; 10], 3).unwrap();
        assert_eq!(t, TreeModel::Leaf { value: 2.0 });
    }

    #[test]
    fn step_function_is_recovered() {
        let xs: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64 - 9.5, (i % 3) as f64]).collect();
        let ys: Vec<f64> = xs.iter().map(|x| if x[0] <= 0.0 { -1.0 } else { 1.0 }).collect();
        let t = greedy_tree_fit(&xs, &ys, 1).unwrap();
        assert_eq!(t.depth(), 1);
        assert!(xs.iter().zip(&ys).all(|(x, y)| t.predict(x) == *y));
    }
}
