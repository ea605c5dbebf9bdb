use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::handle::{Concurrency, Context, Predictor};
use super::record::{Failure, PredictionRecord};
use crate::error::{Error, Result};
use crate::tasks::Prompt;

/// Which inputs a batch run queries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QueryMode {
    /// Query `x_{k+1}` after the first `k` pairs; recorded as query index 0.
    NextTarget,
    /// Query every held-out probe input of the prompt.
    ProbeQueries,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BatchOutput {
    pub records: Vec<PredictionRecord>,
    pub failures: Vec<Failure>,
}

impl BatchOutput {
    pub fn is_complete(&self) -> bool {
        self.failures.is_empty()
    }

    /// Turns any recorded failure into a partial-result error.
    pub fn into_complete(self) -> Result<Vec<PredictionRecord>> {
        match self.failures.first() {
            None => Ok(self.records),
            Some(first) => Err(Error::Partial {
                failed: self.failures.len(),
                total: self.failures.len() + distinct_contexts(&self.records),
                first: format!("prompt {}, k {}: {}", first.prompt_id, first.k, first.error),
            }),
        }
    }
}

fn distinct_contexts(records: &[PredictionRecord]) -> usize {
    let mut keys: Vec<(u64, usize)> = records.iter().map(|r| (r.prompt_id, r.k)).collect();
    keys.dedup();
    keys.len()
}

fn queries_for(prompt: &Prompt, k: usize, mode: QueryMode) -> Vec<Vec<f64>> {
    match mode {
        QueryMode::NextTarget => vec![prompt.xs[k].clone()],
        QueryMode::ProbeQueries => prompt.query_xs.clone(),
    }
}

/// Evaluates `handle` on every `(prompt, k)` pair with up to `workers` threads.
///
/// Records come back sorted by `(prompt_id, k, query_index)`; failed contexts
/// are listed in `failures` instead of aborting the run.
pub fn run_batch(
    handle: &dyn Predictor,
    prompts: &[Prompt],
    k_range: &[usize],
    mode: QueryMode,
    workers: usize,
) -> Result<BatchOutput> {
    for prompt in prompts {
        prompt.validate()?;
        for &k in k_range {
            let ok = match mode {
                QueryMode::NextTarget => k < prompt.len(),
                QueryMode::ProbeQueries => k <= prompt.len(),
            };
            if !ok {
                return Err(Error::config(format!(
                    "k = {k} is out of range for prompt {} with {} pairs",
                    prompt.id,
                    prompt.len()
                )));
            }
        }
    }
    let jobs: Vec<(usize, usize)> = (0..prompts.len())
        .flat_map(|i| k_range.iter().map(move |&k| (i, k)))
        .collect();
    let gate = Mutex::new(());
    let serial = handle.concurrency() == Concurrency::Serial;
    let run = |&(i, k): &(usize, usize)| {
        let prompt = &prompts[i];
        let ctx = Context::new(prompt.id, &prompt.xs[..k], &prompt.ys[..k]);
        let queries = queries_for(prompt, k, mode);
        let out = if serial {
            let _guard = gate.lock().unwrap_or_else(|e| e.into_inner());
            handle.predict_batch(&ctx, &queries)
        } else {
            handle.predict_batch(&ctx, &queries)
        };
        let out = out.and_then(|preds| {
            if preds.len() != queries.len() {
                return Err(Error::Predictor {
                    name: handle.name().to_string(),
                    message: format!("{} predictions for {} queries", preds.len(), queries.len()),
                });
            }
            match preds.iter().position(|v| !v.is_finite()) {
                Some(q) => Err(Error::Predictor {
                    name: handle.name().to_string(),
                    message: format!("non-finite prediction for query {q}"),
                }),
                None => Ok(preds),
            }
        });
        (prompt.id, k, out)
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::config(format!("cannot build worker pool: {e}")))?;
    let results: Vec<_> = pool.install(|| jobs.par_iter().map(run).collect());

    let mut output = BatchOutput::default();
    for (prompt_id, k, out) in results {
        match out {
            Ok(preds) => output.records.extend(preds.into_iter().enumerate().map(|(q, prediction)| {
                PredictionRecord {
                    prompt_id,
                    k,
                    query_index: q,
                    prediction,
                }
            })),
            Err(e) => output.failures.push(Failure {
                prompt_id,
                k,
                error: e.to_string(),
            }),
        }
    }
    output.records.sort_by_key(PredictionRecord::key);
    output.failures.sort_by_key(|f| (f.prompt_id, f.k));
    Ok(output)
}
