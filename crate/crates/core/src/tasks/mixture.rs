use rand::distr::{weighted::WeightedIndex, Distribution};
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::family::{FamilyKind, FunctionFamilySpec};
use super::input::InputDistribution;
use super::prompt::Prompt;
use crate::error::{Error, Result};
use crate::rng::seeded;

/// A weighted mixture of function families sharing one input distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureSpec {
    pub families: Vec<FunctionFamilySpec>,
    pub alpha: Vec<f64>,
}

impl MixtureSpec {
    pub fn single(family: FunctionFamilySpec) -> Self {
        MixtureSpec {
            families: vec![family],
            alpha: vec![1.0],
        }
    }

    /// Equal weights over `families`.
    pub fn uniform(families: Vec<FunctionFamilySpec>) -> Self {
        let m = families.len();
        MixtureSpec {
            families,
            alpha: vec![1.0 / m as f64; m],
        }
    }

    pub fn validate(&self, input: &InputDistribution) -> Result<()> {
        if self.families.is_empty() {
            return Err(Error::config("mixture has no families"));
        }
        crate::bayes::validate_weights(&self.alpha, self.families.len())?;
        input.validate()?;
        for (i, f) in self.families.iter().enumerate() {
            f.validate()?;
            if f.d() != input.dim() {
                return Err(Error::config(format!(
                    "family {i} expects d = {}, input distribution has d = {}",
                    f.d(),
                    input.dim()
                )));
            }
        }
        Ok(())
    }
}

/// Samples one prompt: family `i ~ α`, then `f ~ 𝓕ᵢ`, then i.i.d. inputs,
/// then observation noise for noisy families. The prompt id is left at 0.
pub fn sample_prompt(
    mixture: &MixtureSpec,
    input: &InputDistribution,
    p: usize,
    n_queries: usize,
    seed: u64,
) -> Result<Prompt> {
    mixture.validate(input)?;
    if n_queries == 0 {
        return Err(Error::config("at least one query input is required"));
    }
    let mut rng = seeded(seed);
    let family_id = if mixture.families.len() == 1 {
        0
    } else {
        WeightedIndex::new(&mixture.alpha)
            .map_err(|e| Error::config(e.to_string()))?
            .sample(&mut rng)
    };
    let spec = &mixture.families[family_id];
    let function = spec.sample_function(rng.random())?;
    let xs = input.sample_n(p, &mut rng);
    let query_xs = input.sample_n(n_queries, &mut rng);
    let noise_sd = spec.kind.noise_var().sqrt();
    let ys = xs
        .iter()
        .map(|x| {
            let clean = function.eval(x);
            if noise_sd > 0.0 {
                clean + noise_sd * rng.sample::<f64, _>(StandardNormal)
            } else {
                clean
            }
        })
        .collect();
    Ok(Prompt {
        id: 0,
        xs,
        ys,
        query_xs,
        family_id,
        function_params: function,
        seed,
    })
}

/// Builds the noisy discrete family over `tasks` for a weight set.
pub fn noisy_discrete(weights: Vec<Vec<f64>>, noise_var: f64) -> Result<FunctionFamilySpec> {
    Ok(FunctionFamilySpec::new(FamilyKind::NoisyLinearDiscrete {
        tasks: crate::bayes::DiscreteTaskSet::new(weights, noise_var)?,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bayes::GaussianPrior;

    fn dense(d: usize) -> FunctionFamilySpec {
        FunctionFamilySpec::new(FamilyKind::DenseLinear {
            prior: GaussianPrior::standard(d),
        })
    }

    #[test]
    fn empty_mixture_is_rejected() {
        let m = MixtureSpec {
            families: vec![],
            alpha: vec![],
        };
        let err = sample_prompt(&m, &InputDistribution::standard_normal(2), 3, 1, 0).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let m = MixtureSpec::single(dense(3));
        assert!(sample_prompt(&m, &InputDistribution::standard_normal(2), 3, 1, 0).is_err());
    }

    #[test]
    fn noiseless_outputs_are_exact() {
        let m = MixtureSpec::single(dense(4));
        let p = sample_prompt(&m, &InputDistribution::standard_normal(4), 6, 2, 11).unwrap();
        for (x, y) in p.xs.iter().zip(&p.ys) {
            assert_eq!(*y, p.truth(x));
        }
    }

    #[test]
    fn noisy_outputs_differ_from_truth() {
        let fam = noisy_discrete(vec![vec![1.0, 0.0]], 0.25).unwrap();
        let p = sample_prompt(&MixtureSpec::single(fam), &InputDistribution::standard_normal(2), 50, 1, 2).unwrap();
        let resid: Vec<f64> = p.xs.iter().zip(&p.ys).map(|(x, y)| y - p.truth(x)).collect();
        let var = crate::linalg::variance(&resid);
        assert!(var > 0.1 && var < 0.5, "{var}");
    }
}
