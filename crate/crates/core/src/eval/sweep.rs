use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::bridge::PredictionRecord;
use crate::error::{Error, Result};
use crate::tasks::Prompt;

/// Next-target predictions of one training checkpoint on the ID and OOD sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointDump {
    pub step: u64,
    pub id_preds: Vec<PredictionRecord>,
    pub ood_preds: Vec<PredictionRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForgettingReport {
    pub steps: Vec<u64>,
    pub id_loss: Vec<f64>,
    pub ood_loss: Vec<f64>,
    pub id_smoothed: Vec<f64>,
    pub ood_smoothed: Vec<f64>,
    pub window: usize,
    /// Step with the lowest smoothed OOD loss (earliest on ties).
    pub t_min: u64,
    /// Final over minimum smoothed OOD loss.
    pub ratio: f64,
}

/// Trailing mean over the last `window` entries (fewer at the start).
pub fn moving_average(values: &[f64], window: usize) -> Result<Vec<f64>> {
    if window == 0 {
        return Err(Error::config("moving-average window must be positive"));
    }
    Ok((0..values.len())
        .map(|i| {
            let lo = (i + 1).saturating_sub(window);
            values[lo..=i].iter().sum::<f64>() / (i + 1 - lo) as f64
        })
        .collect())
}

/// Mean squared next-target error over every prompt and every k in `k_range`.
fn dump_loss(step: u64, label: &str, preds: &[PredictionRecord], gold: &[Prompt], k_range: &[usize]) -> Result<f64> {
    let table: HashMap<(u64, usize, usize), f64> = preds.iter().map(|r| (r.key(), r.prediction)).collect();
    if table.len() != preds.len() {
        return Err(Error::Alignment(format!("step {step} {label}: duplicate prediction records")));
    }
    let expected = gold.len() * k_range.len();
    if preds.len() != expected {
        return Err(Error::Alignment(format!(
            "step {step} {label}: {} records for {expected} (prompt, k) pairs",
            preds.len()
        )));
    }
    let mut total = 0.0;
    for p in gold {
        for &k in k_range {
            if k >= p.len() {
                return Err(Error::config(format!("k = {k} leaves no target in prompt {}", p.id)));
            }
            let pred = table.get(&(p.id, k, 0)).ok_or_else(|| {
                Error::Alignment(format!("step {step} {label}: no prediction for prompt {}, k {k}", p.id))
            })?;
            total += (pred - p.truth(&p.xs[k])).powi(2);
        }
    }
    Ok(total / expected as f64)
}

/// Per-checkpoint ID and OOD losses, their moving averages, and the location
/// and size of the OOD minimum.
pub fn checkpoint_sweep(
    dumps: &[CheckpointDump],
    id_gold: &[Prompt],
    ood_gold: &[Prompt],
    k_range: &[usize],
    window: usize,
) -> Result<ForgettingReport> {
    if dumps.is_empty() {
        return Err(Error::config("no checkpoint dumps"));
    }
    if k_range.is_empty() || id_gold.is_empty() || ood_gold.is_empty() {
        return Err(Error::config("sweeps need prompts on both sets and a nonempty k range"));
    }
    if dumps.windows(2).any(|w| w[0].step >= w[1].step) {
        return Err(Error::Alignment("checkpoint steps must be strictly increasing".into()));
    }
    let mut id_loss = Vec::with_capacity(dumps.len());
    let mut ood_loss = Vec::with_capacity(dumps.len());
    for d in dumps {
        id_loss.push(dump_loss(d.step, "id", &d.id_preds, id_gold, k_range)?);
        ood_loss.push(dump_loss(d.step, "ood", &d.ood_preds, ood_gold, k_range)?);
    }
    let id_smoothed = moving_average(&id_loss, window)?;
    let ood_smoothed = moving_average(&ood_loss, window)?;
    let (imin, min) = ood_smoothed
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::INFINITY), |best, (i, v)| if v < best.1 { (i, v) } else { best });
    let last = *ood_smoothed.last().unwrap();
    let ratio = if last == min { 1.0 } else { last / min };
    Ok(ForgettingReport {
        steps: dumps.iter().map(|d| d.step).collect(),
        id_loss,
        ood_loss,
        id_smoothed,
        ood_smoothed,
        window,
        t_min: dumps[imin].step,
        ratio,
    })
}
