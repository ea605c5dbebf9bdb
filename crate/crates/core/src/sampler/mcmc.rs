use nalgebra::{DMatrix, DVector};
use rand::Rng as _;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::diagnostics::{effective_sample_size, split_rhat};
use super::enumerate::DiscreteSupport;
use crate::bayes::GaussianPrior;
use crate::error::{Error, Result};
use crate::linalg::{canonicalize, check_rows, psd_factor};
use crate::rng::{derive_seed, seeded, Rng};

/// Default likelihood variance for sampling.
pub const DEFAULT_SAMPLER_EPS2: f64 = 1e-4;
const ADAPT_WINDOW: usize = 50;
const RHAT_WARN: f64 = 1.1;

/// Prior over the sampled parameter, together with the map to weights `w`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum McmcPrior {
    Gaussian { prior: GaussianPrior },
    /// `w = vec(ABᵀ)` row-major with `A, B ∈ R^{q×r}` standard normal.
    LowRank { q: usize, r: usize },
    /// Uniform over a finite support.
    Discrete { support: DiscreteSupport },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Proposal {
    /// pCN for Gaussian priors, coordinate resampling mixed with
    /// independence draws for discrete priors.
    Auto,
    RandomWalk,
    Pcn,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    /// Iterations per chain, burn-in included.
    pub n_samples: usize,
    pub burn_in: usize,
    pub step_size: f64,
    pub eps2: f64,
    pub seed: u64,
    #[serde(default = "default_chains")]
    pub n_chains: usize,
    #[serde(default = "default_proposal")]
    pub proposal: Proposal,
}

fn default_chains() -> usize {
    4
}

fn default_proposal() -> Proposal {
    Proposal::Auto
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            n_samples: 20_000,
            burn_in: 5_000,
            step_size: 0.1,
            eps2: DEFAULT_SAMPLER_EPS2,
            seed: 0,
            n_chains: 4,
            proposal: Proposal::Auto,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_samples <= self.burn_in {
            return Err(Error::config(format!(
                "n_samples = {} must exceed burn_in = {}",
                self.n_samples, self.burn_in
            )));
        }
        if !(self.eps2 > 0.0) {
            return Err(Error::config("likelihood variance ε² must be positive"));
        }
        if !(self.step_size > 0.0) {
            return Err(Error::config("step size must be positive"));
        }
        if self.n_chains == 0 {
            return Err(Error::config("at least one chain is required"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McmcDiagnostics {
    pub acceptance_rate: f64,
    /// Smallest effective sample size over weight coordinates.
    pub ess: f64,
    /// Largest split-chain R̂ over weight coordinates.
    pub rhat: f64,
    /// Per-coordinate Monte-Carlo standard error of the posterior mean.
    pub mcse: Vec<f64>,
    pub n_chains: usize,
    pub draws_per_chain: usize,
    pub final_step_sizes: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McmcResult {
    pub mean: Vec<f64>,
    pub diagnostics: McmcDiagnostics,
}

enum Param {
    Real(Vec<f64>),
    Digits(Vec<usize>),
}

impl McmcPrior {
    pub fn weight_dim(&self) -> usize {
        match self {
            McmcPrior::Gaussian { prior } => prior.dim(),
            McmcPrior::LowRank { q, .. } => q * q,
            McmcPrior::Discrete { support } => support.dim(),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            McmcPrior::Gaussian { .. } => Ok(()),
            McmcPrior::LowRank { q, r } if !(1 <= *r && r <= q) => {
                Err(Error::config(format!("rank r = {r} violates 1 ≤ r ≤ q = {q}")))
            }
            McmcPrior::LowRank { .. } => Ok(()),
            McmcPrior::Discrete { support } => support.validate(),
        }
    }

    fn sample(&self, rng: &mut Rng) -> Param {
        match self {
            McmcPrior::Gaussian { prior } => Param::Real(prior.sample(rng).iter().cloned().collect()),
            McmcPrior::LowRank { q, r } => {
                Param::Real((0..2 * q * r).map(|_| rng.sample(StandardNormal)).collect())
            }
            McmcPrior::Discrete { support } => {
                let radix = support.radix();
                Param::Digits((0..support.digits()).map(|_| rng.random_range(0..radix)).collect())
            }
        }
    }

    fn weights(&self, theta: &Param, out: &mut [f64]) {
        match (self, theta) {
            (McmcPrior::Gaussian { .. }, Param::Real(v)) => out.copy_from_slice(v),
            (McmcPrior::LowRank { q, r }, Param::Real(v)) => {
                let (a, b) = v.split_at(q * r);
                for i in 0..*q {
                    for j in 0..*q {
                        out[i * q + j] = (0..*r).map(|l| a[i * r + l] * b[j * r + l]).sum();
                    }
                }
            }
            (McmcPrior::Discrete { support }, Param::Digits(dg)) => support.point(dg, out),
            _ => unreachable!("parameter kind matches prior"),
        }
    }
}

/// Gaussian-prior geometry used by the real-valued proposals.
struct RealPrior {
    mean: DVector<f64>,
    factor: DMatrix<f64>,
    precision: DMatrix<f64>,
}

impl RealPrior {
    fn of(prior: &McmcPrior) -> Option<Self> {
        match prior {
            McmcPrior::Gaussian { prior } => Some(RealPrior {
                mean: prior.mean().clone(),
                factor: psd_factor(prior.cov()),
                precision: crate::linalg::sym_pinv(prior.cov()).inverse,
            }),
            McmcPrior::LowRank { q, r } => {
                let n = 2 * q * r;
                Some(RealPrior {
                    mean: DVector::zeros(n),
                    factor: DMatrix::identity(n, n),
                    precision: DMatrix::identity(n, n),
                })
            }
            McmcPrior::Discrete { .. } => None,
        }
    }

    fn log_density(&self, theta: &[f64]) -> f64 {
        let r = DVector::from_column_slice(theta) - &self.mean;
        -0.5 * r.dot(&(&self.precision * &r))
    }
}

struct Target<'a> {
    x: &'a DMatrix<f64>,
    y: &'a DVector<f64>,
    eps2: f64,
}

impl Target<'_> {
    fn log_lik(&self, w: &[f64]) -> f64 {
        let mut sq = 0.0;
        for i in 0..self.x.nrows() {
            let pred: f64 = w.iter().enumerate().map(|(j, v)| self.x[(i, j)] * v).sum();
            let r = self.y[i] - pred;
            sq += r * r;
        }
        -sq / (2.0 * self.eps2)
    }
}

struct Chain {
    draws: Vec<Vec<f64>>,
    accepted: usize,
    kept: usize,
    step: f64,
}

fn run_chain(prior: &McmcPrior, target: &Target, config: &SamplerConfig, seed: u64) -> Chain {
    let mut rng = seeded(seed);
    let d = prior.weight_dim();
    let real = RealPrior::of(prior);
    let proposal = match (config.proposal, &real) {
        (Proposal::Auto, Some(_)) => Proposal::Pcn,
        (p, _) => p,
    };
    let mut step = if proposal == Proposal::Pcn { config.step_size.min(1.0) } else { config.step_size };
    let mut theta = prior.sample(&mut rng);
    let mut w = vec![0.0; d];
    prior.weights(&theta, &mut w);
    let mut ll = target.log_lik(&w);
    let mut lp = match (&real, &theta) {
        (Some(rp), Param::Real(v)) => rp.log_density(v),
        _ => 0.0,
    };
    let keep = config.n_samples - config.burn_in;
    let mut draws = vec![Vec::with_capacity(keep); d];
    let (mut accepted, mut window_acc) = (0usize, 0usize);
    let mut w_new = vec![0.0; d];
    for it in 0..config.n_samples {
        let (cand, cand_lp, ratio_prior) = match (&theta, &real) {
            (Param::Real(v), Some(rp)) => {
                let xi = DVector::from_fn(v.len(), |_, _| rng.sample::<f64, _>(StandardNormal));
                let noise = &rp.factor * xi;
                let cand: Vec<f64> = if proposal == Proposal::Pcn {
                    let s = (1.0 - step * step).sqrt();
                    (0..v.len())
                        .map(|j| rp.mean[j] + s * (v[j] - rp.mean[j]) + step * noise[j])
                        .collect()
                } else {
                    (0..v.len()).map(|j| v[j] + step * noise[j]).collect()
                };
                let clp = rp.log_density(&cand);
                // pCN is reversible with respect to the prior, so only the
                // likelihood enters its acceptance ratio.
                let prior_term = if proposal == Proposal::Pcn { 0.0 } else { clp - lp };
                (Param::Real(cand), clp, prior_term)
            }
            (Param::Digits(dg), None) => {
                let McmcPrior::Discrete { support } = prior else { unreachable!() };
                let radix = support.radix();
                let mut cand = dg.clone();
                if rng.random::<bool>() {
                    let j = rng.random_range(0..cand.len());
                    cand[j] = (cand[j] + rng.random_range(1..radix.max(2))) % radix;
                } else {
                    for v in cand.iter_mut() {
                        *v = rng.random_range(0..radix);
                    }
                }
                (Param::Digits(cand), 0.0, 0.0)
            }
            _ => unreachable!("parameter kind matches prior"),
        };
        prior.weights(&cand, &mut w_new);
        let cand_ll = target.log_lik(&w_new);
        let log_alpha = cand_ll - ll + ratio_prior;
        if log_alpha >= 0.0 || rng.random::<f64>().ln() < log_alpha {
            theta = cand;
            ll = cand_ll;
            lp = cand_lp;
            std::mem::swap(&mut w, &mut w_new);
            if it >= config.burn_in {
                accepted += 1;
            } else {
                window_acc += 1;
            }
        }
        if it < config.burn_in && (it + 1) % ADAPT_WINDOW == 0 {
            let rate = window_acc as f64 / ADAPT_WINDOW as f64;
            if rate > 0.3 {
                step *= 1.25;
            } else if rate < 0.15 {
                step /= 1.25;
            }
            if proposal == Proposal::Pcn {
                step = step.min(1.0);
            }
            window_acc = 0;
        }
        if it >= config.burn_in {
            for (col, v) in draws.iter_mut().zip(&w) {
                col.push(*v);
            }
        }
    }
    Chain {
        draws,
        accepted,
        kept: keep,
        step,
    }
}

/// Posterior mean of `w` under `prior` and likelihood
/// `exp(−‖y − Xw‖² / 2ε²)`, estimated from independent Metropolis chains.
pub fn mcmc_pme(prior: &McmcPrior, x: &DMatrix<f64>, y: &DVector<f64>, config: &SamplerConfig) -> Result<McmcResult> {
    config.validate()?;
    prior.validate()?;
    check_rows(x, y)?;
    let d = prior.weight_dim();
    if x.ncols() != d {
        return Err(Error::shape(format!("design has {} columns, prior has dimension {d}", x.ncols())));
    }
    if matches!(config.proposal, Proposal::RandomWalk | Proposal::Pcn) && matches!(prior, McmcPrior::Discrete { .. }) {
        return Err(Error::Unsupported("continuous proposals need a continuous prior".into()));
    }
    let (x, y) = canonicalize(x, y);
    let target = Target {
        x: &x,
        y: &y,
        eps2: config.eps2,
    };
    let chains: Vec<Chain> = (0..config.n_chains as u64)
        .into_par_iter()
        .map(|c| run_chain(prior, &target, config, derive_seed(config.seed, c)))
        .collect();
    let kept = chains[0].kept;
    let total = (kept * chains.len()) as f64;
    let mut mean = vec![0.0; d];
    let mut rhat: f64 = 0.0;
    let mut ess = f64::INFINITY;
    let mut mcse = vec![0.0; d];
    for j in 0..d {
        let per_chain: Vec<Vec<f64>> = chains.iter().map(|c| c.draws[j].clone()).collect();
        let all: Vec<f64> = per_chain.iter().flatten().cloned().collect();
        mean[j] = all.iter().sum::<f64>() / total;
        let r = split_rhat(&per_chain);
        rhat = if r.is_nan() { rhat } else { rhat.max(r) };
        let e = effective_sample_size(&per_chain);
        ess = ess.min(e);
        let var = crate::linalg::variance(&all);
        mcse[j] = if var > 0.0 { (var / e).sqrt() } else { 0.0 };
    }
    let acceptance_rate = chains.iter().map(|c| c.accepted).sum::<usize>() as f64 / total;
    let warning = (rhat > RHAT_WARN).then(|| format!("split R̂ = {rhat:.3} exceeds {RHAT_WARN}; chains have not mixed"));
    Ok(McmcResult {
        mean,
        diagnostics: McmcDiagnostics {
            acceptance_rate,
            ess,
            rhat,
            mcse,
            n_chains: chains.len(),
            draws_per_chain: kept,
            final_step_sizes: chains.iter().map(|c| c.step).collect(),
            warning,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_config() {
        let cfg = SamplerConfig {
            n_samples: 10,
            burn_in: 10,
            ..SamplerConfig::default()
        };
        let prior = McmcPrior::Gaussian {
            prior: GaussianPrior::standard(2),
        };
        assert!(mcmc_pme(&prior, &DMatrix::zeros(0, 2), &DVector::zeros(0), &cfg).is_err());
    }

    #[test]
    fn empty_prompt_recovers_prior_mean() {
        let prior = McmcPrior::Gaussian {
            prior: GaussianPrior::with_mean(vec![1.0, -2.0], DMatrix::identity(2, 2)).unwrap(),
        };
        let cfg = SamplerConfig {
            n_samples: 6000,
            burn_in: 1000,
            step_size: 0.9,
            ..SamplerConfig::default()
        };
        let res = mcmc_pme(&prior, &DMatrix::zeros(0, 2), &DVector::zeros(0), &cfg).unwrap();
        for (m, (t, se)) in res.mean.iter().zip([1.0, -2.0].iter().zip(&res.diagnostics.mcse)) {
            assert!((m - t).abs() < 4.0 * se, "{m} vs {t} (se {se})");
        }
    }

    #[test]
    fn low_rank_weights_are_outer_products() {
        let prior = McmcPrior::LowRank { q: 2, r: 1 };
        let mut out = vec![0.0; 4];
        prior.weights(&Param::Real(vec![1.0, 2.0, 3.0, 4.0]), &mut out);
        assert_eq!(out, vec![3.0, 4.0, 6.0, 8.0]);
    }
}
