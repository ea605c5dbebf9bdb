use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bridge::{run_batch, Predictor, QueryMode};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, seeded};
use crate::tasks::Prompt;

pub const DEFAULT_PROMPTS: usize = 1280;
pub const DEFAULT_BOOTSTRAP: usize = 1000;
pub const DEFAULT_CI_LEVEL: f64 = 0.90;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub n_boot: usize,
    pub ci_level: f64,
    pub seed: u64,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        BootstrapConfig {
            n_boot: DEFAULT_BOOTSTRAP,
            ci_level: DEFAULT_CI_LEVEL,
            seed: 0,
        }
    }
}

impl BootstrapConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_boot == 0 {
            return Err(Error::config("bootstrap needs at least one resample"));
        }
        if !(self.ci_level > 0.0 && self.ci_level < 1.0) {
            return Err(Error::config(format!("confidence level {} is outside (0, 1)", self.ci_level)));
        }
        Ok(())
    }
}

/// Mean squared error per prompt length with a bootstrap band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalCurve {
    pub predictor: String,
    pub k: Vec<usize>,
    pub mean_loss: Vec<f64>,
    pub ci_low: Vec<f64>,
    pub ci_high: Vec<f64>,
    pub n_prompts: usize,
    pub n_boot: usize,
    pub ci_level: f64,
}

impl EvalCurve {
    pub fn loss_at(&self, k: usize) -> Option<f64> {
        self.k.iter().position(|&kk| kk == k).map(|i| self.mean_loss[i])
    }
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Percentile bootstrap over rows (prompts) of `losses[prompt][column]`.
///
/// Each resample draws whole prompts with replacement, so all columns of a
/// resample share the same prompts. Returns `(low, high)` per column.
pub fn bootstrap_band(losses: &[Vec<f64>], config: &BootstrapConfig) -> Result<(Vec<f64>, Vec<f64>)> {
    config.validate()?;
    let n = losses.len();
    if n == 0 {
        return Err(Error::config("bootstrap over zero prompts"));
    }
    let cols = losses[0].len();
    if losses.iter().any(|r| r.len() != cols) {
        return Err(Error::shape("loss rows have different lengths"));
    }
    let means: Vec<Vec<f64>> = (0..config.n_boot)
        .into_par_iter()
        .map(|b| {
            let mut rng = seeded(derive_seed(config.seed, b as u64));
            let mut acc = vec![0.0; cols];
            for _ in 0..n {
                let row = &losses[rng.random_range(0..n)];
                for (a, v) in acc.iter_mut().zip(row) {
                    *a += v;
                }
            }
            acc.iter().map(|a| a / n as f64).collect()
        })
        .collect();
    let tail = (1.0 - config.ci_level) / 2.0;
    let mut low = Vec::with_capacity(cols);
    let mut high = Vec::with_capacity(cols);
    for c in 0..cols {
        let mut col: Vec<f64> = means.iter().map(|m| m[c]).collect();
        col.sort_by(f64::total_cmp);
        low.push(quantile(&col, tail));
        high.push(quantile(&col, 1.0 - tail));
    }
    Ok((low, high))
}

/// Builds a curve from per-prompt squared errors `losses[prompt][k index]`.
pub fn curve_from_losses(
    predictor: &str,
    k_range: &[usize],
    losses: &[Vec<f64>],
    config: &BootstrapConfig,
) -> Result<EvalCurve> {
    if losses.iter().any(|r| r.len() != k_range.len()) {
        return Err(Error::shape("loss rows do not match the k grid"));
    }
    let (low, high) = bootstrap_band(losses, config)?;
    let n = losses.len() as f64;
    let mean: Vec<f64> = (0..k_range.len())
        .map(|c| losses.iter().map(|r| r[c]).sum::<f64>() / n)
        .collect();
    Ok(EvalCurve {
        predictor: predictor.to_string(),
        k: k_range.to_vec(),
        ci_low: low.iter().zip(&mean).map(|(l, m)| l.min(*m)).collect(),
        ci_high: high.iter().zip(&mean).map(|(h, m)| h.max(*m)).collect(),
        mean_loss: mean,
        n_prompts: losses.len(),
        n_boot: config.n_boot,
        ci_level: config.ci_level,
    })
}

/// Squared errors `(M(P^k) − f(x_{k+1}))²` per prompt and k.
///
/// The target is the noiseless function value at the next input.
pub fn squared_errors(predictor: &dyn Predictor, prompts: &[Prompt], k_range: &[usize]) -> Result<Vec<Vec<f64>>> {
    if prompts.is_empty() {
        return Err(Error::config("no prompts to evaluate"));
    }
    if k_range.is_empty() {
        return Err(Error::config("empty k range"));
    }
    let workers = rayon::current_num_threads();
    let out = run_batch(predictor, prompts, k_range, QueryMode::NextTarget, workers)?;
    let records = out.into_complete()?;
    let mut index = std::collections::HashMap::with_capacity(records.len());
    for r in &records {
        index.insert((r.prompt_id, r.k), r.prediction);
    }
    prompts
        .iter()
        .map(|p| {
            k_range
                .iter()
                .map(|&k| {
                    let pred = index
                        .get(&(p.id, k))
                        .ok_or_else(|| Error::Alignment(format!("no prediction for prompt {}, k {k}", p.id)))?;
                    Ok((pred - p.truth(&p.xs[k])).powi(2))
                })
                .collect()
        })
        .collect()
}

/// Mean squared error at each prompt length with a prompt-level bootstrap band.
pub fn loss_at_k(
    predictor: &dyn Predictor,
    prompts: &[Prompt],
    k_range: &[usize],
    config: &BootstrapConfig,
) -> Result<EvalCurve> {
    config.validate()?;
    let ids: std::collections::HashSet<u64> = prompts.iter().map(|p| p.id).collect();
    if ids.len() != prompts.len() {
        return Err(Error::config("prompt ids must be unique"));
    }
    let losses = squared_errors(predictor, prompts, k_range)?;
    curve_from_losses(predictor.name(), k_range, &losses, config)
}

/// One curve per predictor on a shared prompt set; a failing predictor does
/// not abort the others.
pub fn compare_predictors(
    predictors: &[&dyn Predictor],
    prompts: &[Prompt],
    k_range: &[usize],
    config: &BootstrapConfig,
) -> Vec<(String, Result<EvalCurve>)> {
    predictors
        .iter()
        .map(|p| (p.name().to_string(), loss_at_k(*p, prompts, k_range, config)))
        .collect()
}
