use std::collections::HashSet;

use rand::seq::index::sample;
use rand::Rng as _;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{derive_seed, seeded, Rng};
use crate::tasks::{
    monomial_pairs, noisy_discrete, sample_prompt, FamilyKind, FunctionFamilySpec, FunctionInstance,
    InputDistribution, MixtureSpec, Prompt,
};

/// The pretraining pools of the multi-task generalization experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SuiteKind {
    /// Families are `D`-subsets of the degree-2 monomials in `d` variables.
    Monomials { d: usize, subset_size: usize },
    /// Families are `D`-subsets of the frequencies `1..=N`.
    FourierSubset {
        max_freq: usize,
        subset_size: usize,
        half_width: f64,
    },
    /// A single noisy regression family over `K` standard-normal weight vectors.
    NlrDiscrete { d: usize, noise_var: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    #[serde(flatten)]
    pub kind: SuiteKind,
    /// Task diversity `K`.
    pub k_tasks: usize,
    /// Context pairs per prompt.
    pub p: usize,
    pub n_id: usize,
    pub n_ood: usize,
    #[serde(default = "one")]
    pub n_queries: usize,
    pub seed: u64,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiTaskSuite {
    pub config: SuiteConfig,
    /// Number of available families, when finite.
    pub pool_size: Option<u128>,
    pub input: InputDistribution,
    /// The `K` pretraining families (one family holding `K` tasks for NLR).
    pub pretrain_families: Vec<FunctionFamilySpec>,
    /// One fresh family per OOD prompt.
    pub ood_families: Vec<FunctionFamilySpec>,
    /// ID prompts; `family_id` is the pretraining family (or NLR task) index.
    pub id_prompts: Vec<Prompt>,
    /// OOD prompts; `family_id` is `K + i` for the `i`-th OOD prompt.
    pub ood_prompts: Vec<Prompt>,
}

/// `C(n, r)`, saturating at `u128::MAX`.
pub fn binomial(n: usize, r: usize) -> u128 {
    if r > n {
        return 0;
    }
    let r = r.min(n - r);
    let mut acc: u128 = 1;
    for i in 0..r {
        // acc * (n - i) / (i + 1) stays integral at every step.
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i + 1) as u128,
            None => return u128::MAX,
        };
    }
    acc
}

fn draw_subset(rng: &mut Rng, pool: usize, size: usize) -> Vec<usize> {
    let mut s = sample(rng, pool, size).into_vec();
    s.sort_unstable();
    s
}

fn subset_family(kind: &SuiteKind, subset: &[usize]) -> FunctionFamilySpec {
    match kind {
        SuiteKind::Monomials { d, .. } => {
            let all = monomial_pairs(*d);
            FunctionFamilySpec::new(FamilyKind::MonomialSubset {
                d: *d,
                pairs: subset.iter().map(|&i| all[i]).collect(),
            })
        }
        SuiteKind::FourierSubset {
            max_freq, half_width, ..
        } => FunctionFamilySpec::new(FamilyKind::FourierSubset {
            freqs: subset.iter().map(|&i| i + 1).collect(),
            max_freq: *max_freq,
            half_width: *half_width,
        }),
        SuiteKind::NlrDiscrete { .. } => unreachable!("NLR suites are not subset-based"),
    }
}

fn normal_vector(rng: &mut Rng, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.sample(StandardNormal)).collect()
}

fn prompts_from<F>(n: usize, seed: u64, make: F) -> Result<Vec<Prompt>>
where
    F: Fn(usize, u64) -> Result<Prompt> + Sync,
{
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut p = make(i, derive_seed(seed, i as u64))?;
            p.id = i as u64;
            Ok(p)
        })
        .collect()
}

/// Samples `K` distinct pretraining families, ID prompts from their uniform
/// mixture, and OOD prompts from fresh families outside the pretraining set.
pub fn build_multitask_suite(config: &SuiteConfig) -> Result<MultiTaskSuite> {
    let k = config.k_tasks;
    if k == 0 {
        return Err(Error::config("task diversity K must be positive"));
    }
    if config.p == 0 {
        return Err(Error::config("prompts need at least one pair"));
    }
    let mut rng = seeded(derive_seed(config.seed, 0));
    let id_seed = derive_seed(config.seed, 1);
    let ood_seed = derive_seed(config.seed, 2);
    let nq = config.n_queries;

    match &config.kind {
        SuiteKind::NlrDiscrete { d, noise_var } => {
            if *d == 0 {
                return Err(Error::config("d must be positive"));
            }
            let input = InputDistribution::standard_normal(*d);
            let tasks: Vec<Vec<f64>> = (0..k).map(|_| normal_vector(&mut rng, *d)).collect();
            let family = noisy_discrete(tasks, *noise_var)?;
            let mixture = MixtureSpec::single(family.clone());
            let id_prompts = prompts_from(config.n_id, id_seed, |_, s| {
                let mut p = sample_prompt(&mixture, &input, config.p, nq, s)?;
                if let FunctionInstance::Linear { component: Some(c), .. } = p.function_params {
                    p.family_id = c;
                }
                Ok(p)
            })?;
            let ood_families = (0..config.n_ood)
                .map(|_| noisy_discrete(vec![normal_vector(&mut rng, *d)], *noise_var))
                .collect::<Result<Vec<_>>>()?;
            let ood_prompts = prompts_from(config.n_ood, ood_seed, |i, s| {
                let mut p = sample_prompt(&MixtureSpec::single(ood_families[i].clone()), &input, config.p, nq, s)?;
                p.family_id = k + i;
                Ok(p)
            })?;
            Ok(MultiTaskSuite {
                config: config.clone(),
                pool_size: None,
                input,
                pretrain_families: vec![family],
                ood_families,
                id_prompts,
                ood_prompts,
            })
        }
        kind => {
            let (pool, size, input) = match kind {
                SuiteKind::Monomials { d, subset_size } => {
                    (monomial_pairs(*d).len(), *subset_size, InputDistribution::standard_normal(*d))
                }
                SuiteKind::FourierSubset {
                    max_freq,
                    subset_size,
                    half_width,
                } => (*max_freq, *subset_size, InputDistribution::symmetric(*half_width)),
                SuiteKind::NlrDiscrete { .. } => unreachable!(),
            };
            if size == 0 || size > pool {
                return Err(Error::config(format!("subset size {size} must be in 1..={pool}")));
            }
            let pool_size = binomial(pool, size);
            let needed = k as u128 + u128::from(config.n_ood > 0);
            if needed > pool_size {
                return Err(Error::config(format!(
                    "K = {k} exceeds the {pool_size} available families{}",
                    if config.n_ood > 0 { " minus one reserved for OOD" } else { "" }
                )));
            }
            let mut seen = HashSet::with_capacity(k);
            let mut subsets = Vec::with_capacity(k);
            while subsets.len() < k {
                let s = draw_subset(&mut rng, pool, size);
                if seen.insert(s.clone()) {
                    subsets.push(s);
                }
            }
            let pretrain_families: Vec<_> = subsets.iter().map(|s| subset_family(kind, s)).collect();
            let ood_families: Vec<_> = (0..config.n_ood)
                .map(|_| loop {
                    let s = draw_subset(&mut rng, pool, size);
                    if !seen.contains(&s) {
                        break subset_family(kind, &s);
                    }
                })
                .collect();
            let mixture = MixtureSpec::uniform(pretrain_families.clone());
            mixture.validate(&input)?;
            let id_prompts = prompts_from(config.n_id, id_seed, |_, s| sample_prompt(&mixture, &input, config.p, nq, s))?;
            let ood_prompts = prompts_from(config.n_ood, ood_seed, |i, s| {
                let mut p = sample_prompt(&MixtureSpec::single(ood_families[i].clone()), &input, config.p, nq, s)?;
                p.family_id = k + i;
                Ok(p)
            })?;
            Ok(MultiTaskSuite {
                config: config.clone(),
                pool_size: Some(pool_size),
                input,
                pretrain_families,
                ood_families,
                id_prompts,
                ood_prompts,
            })
        }
    }
}
