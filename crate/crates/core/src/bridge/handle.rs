use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    InProcess,
    Subprocess,
    PredictionFile,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Concurrency {
    Serial,
    ConcurrentSafe,
}

/// The in-context examples a prediction is conditioned on.
#[derive(Debug, Clone, Copy)]
pub struct Context<'a> {
    pub prompt_id: u64,
    pub xs: &'a [Vec<f64>],
    pub ys: &'a [f64],
}

impl<'a> Context<'a> {
    pub fn new(prompt_id: u64, xs: &'a [Vec<f64>], ys: &'a [f64]) -> Self {
        Context { prompt_id, xs, ys }
    }

    pub fn k(&self) -> usize {
        self.xs.len()
    }

    pub(crate) fn check(&self, queries: &[Vec<f64>]) -> Result<usize> {
        if self.xs.len() != self.ys.len() {
            return Err(Error::shape(format!(
                "context has {} inputs and {} outputs",
                self.xs.len(),
                self.ys.len()
            )));
        }
        let d = self
            .xs
            .first()
            .or(queries.first())
            .map_or(0, Vec::len);
        if self.xs.iter().chain(queries).any(|x| x.len() != d) {
            return Err(Error::shape("context and query inputs have different dimensions"));
        }
        Ok(d)
    }
}

/// Anything that maps a context and query inputs to scalar predictions.
///
/// `predict_batch` receives the queries of one context at once; the position
/// of a query in the slice is its query index.
pub trait Predictor: Send + Sync {
    fn name(&self) -> &str;

    fn mode(&self) -> Mode {
        Mode::InProcess
    }

    fn concurrency(&self) -> Concurrency {
        Concurrency::ConcurrentSafe
    }

    fn predict_batch(&self, ctx: &Context, queries: &[Vec<f64>]) -> Result<Vec<f64>>;

    fn predict(&self, ctx: &Context, query: &[f64]) -> Result<f64> {
        let out = self.predict_batch(ctx, &[query.to_vec()])?;
        out.into_iter().next().ok_or_else(|| Error::Predictor {
            name: self.name().to_string(),
            message: "no prediction returned".into(),
        })
    }
}

/// Wraps a closure as an in-process, concurrent-safe predictor.
pub struct FnPredictor<F> {
    name: String,
    f: F,
}

impl<F> FnPredictor<F>
where
    F: Fn(&Context, &[f64]) -> Result<f64> + Send + Sync,
{
    pub fn new(name: impl Into<String>, f: F) -> Self {
        FnPredictor { name: name.into(), f }
    }
}

impl<F> Predictor for FnPredictor<F>
where
    F: Fn(&Context, &[f64]) -> Result<f64> + Send + Sync,
{
    fn name(&self) -> &str {
        &self.name
    }

    fn predict_batch(&self, ctx: &Context, queries: &[Vec<f64>]) -> Result<Vec<f64>> {
        queries.iter().map(|q| (self.f)(ctx, q)).collect()
    }
}
