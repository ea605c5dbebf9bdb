//! Black-box analysis of predictors: implied-weight recovery by least squares
//! on probe queries, and Fourier spectra on a uniform grid.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::bridge::{Context, Predictor};
use crate::error::{Error, Result};
use crate::linalg::{design_matrix, lstsq_min_norm};
use crate::rng::seeded;
use crate::tasks::{InputDistribution, Prompt};

/// Grid size used when none is given.
pub const DEFAULT_GRID: usize = 256;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeResult {
    pub w_probe: Vec<f64>,
    /// Euclidean norm of `X'w_probe − y'`.
    pub residual: f64,
    pub n_queries: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    /// Cosine coefficients `a_0..a_N`.
    pub a: Vec<f64>,
    /// Sine coefficients; `b[0]` is always 0.
    pub b: Vec<f64>,
    /// `a[n]² + b[n]²`.
    pub power: Vec<f64>,
}

/// Predicts every query, reporting the index of the first failing query.
fn predict_all(predictor: &dyn Predictor, ctx: &Context, queries: &[Vec<f64>]) -> Result<Vec<f64>> {
    let located = |q: usize, e: Error| Error::Predictor {
        name: predictor.name().to_string(),
        message: format!("query {q}: {e}"),
    };
    match predictor.predict_batch(ctx, queries) {
        Ok(out) if out.len() == queries.len() => {
            match out.iter().position(|v| !v.is_finite()) {
                Some(q) => Err(located(q, Error::Numeric("non-finite prediction".into()))),
                None => Ok(out),
            }
        }
        Ok(out) => Err(Error::Predictor {
            name: predictor.name().to_string(),
            message: format!("{} predictions for {} queries", out.len(), queries.len()),
        }),
        Err(batch_err) => {
            for (q, query) in queries.iter().enumerate() {
                if let Err(e) = predictor.predict(ctx, query) {
                    return Err(located(q, e));
                }
            }
            Err(batch_err)
        }
    }
}

/// Recovers the weight vector a predictor implicitly applies after a fixed context.
///
/// Draws `n_queries` (default `2d`) inputs from `input`, predicts them, and
/// solves `y' ≈ X'w` in the least-squares sense.
pub fn probe_weights(
    predictor: &dyn Predictor,
    ctx: &Context,
    input: &InputDistribution,
    n_queries: Option<usize>,
    seed: u64,
) -> Result<ProbeResult> {
    input.validate()?;
    let d = input.dim();
    let n = n_queries.unwrap_or(2 * d);
    if n < d {
        return Err(Error::config(format!("{n} probe queries cannot determine {d} weights")));
    }
    let queries = input.sample_n(n, &mut seeded(seed));
    let preds = predict_all(predictor, ctx, &queries)?;
    let x = design_matrix(&queries, d)?;
    let y = DVector::from_vec(preds);
    let w = lstsq_min_norm(&x, &y);
    let residual = (&x * &w - &y).norm();
    Ok(ProbeResult {
        w_probe: w.iter().cloned().collect(),
        residual,
        n_queries: n,
    })
}

/// [`probe_weights`] after the first `k` pairs of a prompt.
pub fn probe_prompt(
    predictor: &dyn Predictor,
    prompt: &Prompt,
    k: usize,
    input: &InputDistribution,
    n_queries: Option<usize>,
    seed: u64,
) -> Result<ProbeResult> {
    prompt.validate()?;
    if k > prompt.len() {
        return Err(Error::config(format!("k = {k} exceeds prompt length {}", prompt.len())));
    }
    let ctx = Context::new(prompt.id, &prompt.xs[..k], &prompt.ys[..k]);
    probe_weights(predictor, &ctx, input, n_queries, seed)
}

/// The grid `x_j = −L + 2Lj/m`, `j = 0..m`.
pub fn dft_grid(half_width: f64, m: usize) -> Vec<f64> {
    (0..m).map(|j| -half_width + 2.0 * half_width * j as f64 / m as f64).collect()
}

/// Fourier coefficients of samples `ys` on [`dft_grid`], by least squares onto
/// `{1, cos(nπx/L), sin(nπx/L)}` for `n ≤ N`.
pub fn fourier_coefficients(ys: &[f64], max_freq: usize, half_width: f64) -> Result<Spectrum> {
    let m = ys.len();
    let required = 2 * max_freq + 1;
    if m < required {
        return Err(Error::UnderResolved { m, required });
    }
    if !(half_width > 0.0) || !half_width.is_finite() {
        return Err(Error::config("half-width must be positive and finite"));
    }
    let grid = dft_grid(half_width, m);
    let basis = DMatrix::from_fn(m, required, |j, c| {
        let x = grid[j];
        match c {
            0 => 1.0,
            c if c <= max_freq => (c as f64 * PI * x / half_width).cos(),
            c => ((c - max_freq) as f64 * PI * x / half_width).sin(),
        }
    });
    let coef = lstsq_min_norm(&basis, &DVector::from_column_slice(ys));
    let a: Vec<f64> = (0..=max_freq).map(|n| coef[n]).collect();
    let b: Vec<f64> = (0..=max_freq)
        .map(|n| if n == 0 { 0.0 } else { coef[max_freq + n] })
        .collect();
    let power = a.iter().zip(&b).map(|(a, b)| a * a + b * b).collect();
    Ok(Spectrum { a, b, power })
}

/// Evaluates a scalar-input predictor on `m` grid points in `[−L, L]` after a
/// fixed context and returns its spectrum up to frequency `N`.
pub fn dft_spectrum(
    predictor: &dyn Predictor,
    ctx: &Context,
    max_freq: usize,
    half_width: f64,
    m: usize,
) -> Result<Spectrum> {
    if m < 2 * max_freq + 1 {
        return Err(Error::UnderResolved {
            m,
            required: 2 * max_freq + 1,
        });
    }
    if ctx.xs.iter().any(|x| x.len() != 1) {
        return Err(Error::shape("spectra need scalar inputs"));
    }
    let queries: Vec<Vec<f64>> = dft_grid(half_width, m).into_iter().map(|x| vec![x]).collect();
    let ys = predict_all(predictor, ctx, &queries)?;
    fourier_coefficients(&ys, max_freq, half_width)
}

/// Mean squared coordinate difference.
pub fn weight_mse(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::shape(format!("weight vectors of length {} and {}", a.len(), b.len())));
    }
    if a.is_empty() {
        return Err(Error::shape("empty weight vectors"));
    }
    Ok(a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / a.len() as f64)
}
