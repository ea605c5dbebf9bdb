use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::handle::{Context, Predictor};
use crate::baselines::{
    greedy_tree_fit, lasso, linf_min, mlp_fit, nuclear_norm_min, ols_min_norm, Mlp, MlpConfig, TreeModel,
};
use crate::bayes::{dmmse_pme, gaussian_pme, gaussian_pme_noiseless, mixture_pme, ridge_pme, DiscreteTaskSet, GaussianPrior, DEFAULT_EVIDENCE_EPS2};
use crate::error::{Error, Result};
use crate::linalg::design_matrix;
use crate::sampler::{enumerate_discrete_pme, mcmc_pme, DiscreteSupport, McmcPrior, SamplerConfig};
use crate::tasks::FeatureMap;

fn evidence_eps2() -> f64 {
    DEFAULT_EVIDENCE_EPS2
}

fn sampler_eps2() -> f64 {
    crate::sampler::DEFAULT_SAMPLER_EPS2
}

fn gaussian_fit(prior: &GaussianPrior, x: &DMatrix<f64>, y: &DVector<f64>, eps2: Option<f64>) -> Result<DVector<f64>> {
    match eps2 {
        Some(e) => gaussian_pme(prior, x, y, e),
        None => gaussian_pme_noiseless(prior, x, y),
    }
}

/// Declarative description of an in-process predictor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum PredictorSpec {
    /// Posterior mean under a Gaussian prior, optionally on a feature basis.
    /// Without `eps2` the noiseless limit is used.
    Gaussian {
        prior: GaussianPrior,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        eps2: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        features: Option<FeatureMap>,
    },
    /// Posterior mean under the skewed-covariance prior.
    Skewed {
        d: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        eps2: Option<f64>,
    },
    Gmm {
        components: Vec<GaussianPrior>,
        alpha: Vec<f64>,
        #[serde(default = "evidence_eps2")]
        eps2: f64,
    },
    Dmmse { tasks: DiscreteTaskSet },
    Ridge { noise_var: f64 },
    Ols,
    OlsFeatures { map: FeatureMap },
    Lasso {
        alpha: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        features: Option<FeatureMap>,
    },
    Linf,
    Nuclear { q: usize },
    Tree { depth: usize },
    Mlp {
        #[serde(default)]
        config: MlpConfig,
    },
    Enumerate {
        support: DiscreteSupport,
        #[serde(default = "sampler_eps2")]
        eps2: f64,
    },
    Mcmc { prior: McmcPrior, config: SamplerConfig },
    /// Returns the last in-context output, or 0 for an empty context.
    LastY,
    Zero,
}

impl PredictorSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            PredictorSpec::Gaussian { .. } => "gaussian",
            PredictorSpec::Skewed { .. } => "skewed",
            PredictorSpec::Gmm { .. } => "gmm",
            PredictorSpec::Dmmse { .. } => "dmmse",
            PredictorSpec::Ridge { .. } => "ridge",
            PredictorSpec::Ols => "ols",
            PredictorSpec::OlsFeatures { .. } => "ols-features",
            PredictorSpec::Lasso { .. } => "lasso",
            PredictorSpec::Linf => "linf",
            PredictorSpec::Nuclear { .. } => "nuclear",
            PredictorSpec::Tree { .. } => "tree",
            PredictorSpec::Mlp { .. } => "mlp",
            PredictorSpec::Enumerate { .. } => "enumerate",
            PredictorSpec::Mcmc { .. } => "mcmc",
            PredictorSpec::LastY => "last-y",
            PredictorSpec::Zero => "zero",
        }
    }

    pub fn build(self) -> BuiltinPredictor {
        let name = self.kind().to_string();
        BuiltinPredictor { name, spec: self }
    }

    pub fn named(self, name: impl Into<String>) -> BuiltinPredictor {
        BuiltinPredictor {
            name: name.into(),
            spec: self,
        }
    }
}

/// A model fitted to one context.
#[derive(Debug, Clone, PartialEq)]
pub enum Fitted {
    Linear { w: Vec<f64>, features: Option<FeatureMap> },
    Tree(TreeModel),
    Mlp(Mlp),
    Constant(f64),
}

impl Fitted {
    pub fn predict(&self, x: &[f64]) -> f64 {
        match self {
            Fitted::Linear { w, features: None } => w.iter().zip(x).map(|(a, b)| a * b).sum(),
            Fitted::Linear { w, features: Some(map) } => map.apply(x).iter().zip(w).map(|(a, b)| a * b).sum(),
            Fitted::Tree(t) => t.predict(x),
            Fitted::Mlp(m) => m.predict(x),
            Fitted::Constant(c) => *c,
        }
    }

    pub fn weights(&self) -> Option<&[f64]> {
        match self {
            Fitted::Linear { w, .. } => Some(w),
            _ => None,
        }
    }
}

pub struct BuiltinPredictor {
    name: String,
    spec: PredictorSpec,
}

fn linear(w: DVector<f64>) -> Fitted {
    Fitted::Linear {
        w: w.iter().cloned().collect(),
        features: None,
    }
}

impl BuiltinPredictor {
    pub fn spec(&self) -> &PredictorSpec {
        &self.spec
    }

    /// Fits the predictor to a context of inputs with dimension `d`.
    pub fn fit(&self, ctx: &Context, d: usize) -> Result<Fitted> {
        let x = || design_matrix(ctx.xs, d);
        let y = || DVector::from_column_slice(ctx.ys);
        let feats = |map: &FeatureMap| -> Result<DMatrix<f64>> {
            map.validate()?;
            map.design(ctx.xs)
        };
        Ok(match &self.spec {
            PredictorSpec::Gaussian { prior, eps2, features } => {
                let design = match features {
                    Some(map) => feats(map)?,
                    None => x()?,
                };
                Fitted::Linear {
                    w: gaussian_fit(prior, &design, &y(), *eps2)?.iter().cloned().collect(),
                    features: features.clone(),
                }
            }
            PredictorSpec::Skewed { d: pd, eps2 } => linear(gaussian_fit(&GaussianPrior::skewed(*pd), &x()?, &y(), *eps2)?),
            PredictorSpec::Gmm { components, alpha, eps2 } => Fitted::Linear {
                w: mixture_pme(components, alpha, &x()?, &y(), *eps2)?.combined_mean,
                features: None,
            },
            PredictorSpec::Dmmse { tasks } => linear(dmmse_pme(tasks, &x()?, &y())?),
            PredictorSpec::Ridge { noise_var } => linear(ridge_pme(*noise_var, &x()?, &y())?),
            PredictorSpec::Ols => Fitted::Linear {
                w: ols_min_norm(&x()?, &y())?.solution,
                features: None,
            },
            PredictorSpec::OlsFeatures { map } => Fitted::Linear {
                w: ols_min_norm(&feats(map)?, &y())?.solution,
                features: Some(map.clone()),
            },
            PredictorSpec::Lasso { alpha, features } => {
                let design = match features {
                    Some(map) => feats(map)?,
                    None => x()?,
                };
                Fitted::Linear {
                    w: lasso(&design, &y(), *alpha)?.solution,
                    features: features.clone(),
                }
            }
            PredictorSpec::Linf => Fitted::Linear {
                w: linf_min(&x()?, &y())?.solution,
                features: None,
            },
            PredictorSpec::Nuclear { q } => Fitted::Linear {
                w: nuclear_norm_min(&x()?, &y(), *q)?.solution,
                features: None,
            },
            PredictorSpec::Tree { depth } => Fitted::Tree(greedy_tree_fit(ctx.xs, ctx.ys, *depth)?),
            PredictorSpec::Mlp { config } => {
                if ctx.xs.is_empty() {
                    Fitted::Constant(0.0)
                } else {
                    Fitted::Mlp(mlp_fit(ctx.xs, ctx.ys, config)?.model)
                }
            }
            PredictorSpec::Enumerate { support, eps2 } => linear(enumerate_discrete_pme(support, &x()?, &y(), *eps2)?),
            PredictorSpec::Mcmc { prior, config } => Fitted::Linear {
                w: mcmc_pme(prior, &x()?, &y(), config)?.mean,
                features: None,
            },
            PredictorSpec::LastY => Fitted::Constant(ctx.ys.last().copied().unwrap_or(0.0)),
            PredictorSpec::Zero => Fitted::Constant(0.0),
        })
    }

    /// Weight vector the predictor applies to (features of) the query.
    pub fn implied_weights(&self, ctx: &Context, d: usize) -> Result<Option<Vec<f64>>> {
        Ok(self.fit(ctx, d)?.weights().map(<[f64]>::to_vec))
    }
}

impl Predictor for BuiltinPredictor {
    fn name(&self) -> &str {
        &self.name
    }

    fn predict_batch(&self, ctx: &Context, queries: &[Vec<f64>]) -> Result<Vec<f64>> {
        let d = ctx.check(queries)?;
        let fitted = self.fit(ctx, d).map_err(|e| Error::Predictor {
            name: self.name.clone(),
            message: e.to_string(),
        })?;
        let out: Vec<f64> = queries.iter().map(|q| fitted.predict(q)).collect();
        if let Some(bad) = out.iter().position(|v| !v.is_finite()) {
            return Err(Error::Predictor {
                name: self.name.clone(),
                message: format!("non-finite prediction for query {bad}"),
            });
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_prediction_is_weight_dot_query() {
        let xs = vec![vec![1.0, 2.0, 0.5], vec![-1.0, 0.3, 2.0]];
        let ys = vec![0.7, -1.1];
        let ctx = Context::new(0, &xs, &ys);
        let p = PredictorSpec::Gaussian {
            prior: GaussianPrior::standard(3),
            eps2: None,
            features: None,
        }
        .build();
        let q = vec![0.2, -0.4, 1.5];
        let w = p.implied_weights(&ctx, 3).unwrap().unwrap();
        let direct: f64 = w.iter().zip(&q).map(|(a, b)| a * b).sum();
        assert!((p.predict(&ctx, &q).unwrap() - direct).abs() <= 1e-12);
    }

    #[test]
    fn last_y_echoes() {
        let xs = vec![vec![1.0], vec![2.0]];
        let ys = vec![3.0, 4.5];
        let p = PredictorSpec::LastY.build();
        assert_eq!(p.predict(&Context::new(0, &xs, &ys), &[0.0]).unwrap(), 4.5);
        assert_eq!(p.predict(&Context::new(0, &[], &[]), &[0.0]).unwrap(), 0.0);
    }

    #[test]
    fn predictor_parses_from_json() {
        let spec: PredictorSpec = serde_json::from_str(r#"{"name":"ridge","noise_var":0.25}"#).unwrap();
        assert_eq!(spec, PredictorSpec::Ridge { noise_var: 0.25 });
        let spec: PredictorSpec = serde_json::from_str(r#"{"name":"ols"}"#).unwrap();
        assert_eq!(spec.kind(), "ols");
    }

    #[test]
    fn mismatched_query_dimension_is_rejected() {
        let xs = vec![vec![1.0, 2.0]];
        let ys = vec![1.0];
        let p = PredictorSpec::Ols.build();
        assert!(p.predict(&Context::new(0, &xs, &ys), &[1.0]).is_err());
    }
}
