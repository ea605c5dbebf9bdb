use std::collections::HashMap;
use std::path::Path;

use super::handle::{Context, Mode, Predictor};
use super::record::{read_records, PredictionRecord};
use crate::error::{Error, Result};

/// Serves stored predictions keyed by `(prompt_id, k, query_index)`.
pub struct PredictionFile {
    name: String,
    table: HashMap<(u64, usize, usize), f64>,
}

impl PredictionFile {
    pub fn open(name: impl Into<String>, path: &Path) -> Result<Self> {
        Ok(Self::from_records(name, &read_records(path)?))
    }

    pub fn from_records(name: impl Into<String>, records: &[PredictionRecord]) -> Self {
        PredictionFile {
            name: name.into(),
            table: records.iter().map(|r| (r.key(), r.prediction)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    pub fn get(&self, prompt_id: u64, k: usize, query_index: usize) -> Option<f64> {
        self.table.get(&(prompt_id, k, query_index)).copied()
    }
}

impl Predictor for PredictionFile {
    fn name(&self) -> &str {
        &self.name
    }

    fn mode(&self) -> Mode {
        Mode::PredictionFile
    }

    fn predict_batch(&self, ctx: &Context, queries: &[Vec<f64>]) -> Result<Vec<f64>> {
        (0..queries.len())
            .map(|q| {
                self.get(ctx.prompt_id, ctx.k(), q).ok_or_else(|| Error::Predictor {
                    name: self.name.clone(),
                    message: format!("no record for prompt {}, k {}, query {q}", ctx.prompt_id, ctx.k()),
                })
            })
            .collect()
    }
}
