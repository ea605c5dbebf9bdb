use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Rng;

/// Distribution of prompt inputs `x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InputDistribution {
    /// `N(0, I_d)`
    StandardNormal { d: usize },
    /// Scalar `U(low, high)`.
    Uniform { low: f64, high: f64 },
}

impl InputDistribution {
    pub fn standard_normal(d: usize) -> Self {
        InputDistribution::StandardNormal { d }
    }

    /// Scalar `U(−L, L)`.
    pub fn symmetric(half_width: f64) -> Self {
        InputDistribution::Uniform {
            low: -half_width,
            high: half_width,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            InputDistribution::StandardNormal { d } => *d,
            InputDistribution::Uniform { .. } => 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            InputDistribution::StandardNormal { d } if *d == 0 => {
                Err(Error::config("input dimension d must be at least 1"))
            }
            InputDistribution::Uniform { low, high } if !(low < high) || !low.is_finite() || !high.is_finite() => {
                Err(Error::config(format!("uniform bounds [{low}, {high}] are empty or infinite")))
            }
            _ => Ok(()),
        }
    }

    pub fn sample(&self, rng: &mut Rng) -> Vec<f64> {
        match self {
            InputDistribution::StandardNormal { d } => {
                (0..*d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
            }
            InputDistribution::Uniform { low, high } => vec![rng.random_range(*low..*high)],
        }
    }

    pub fn sample_n(&self, n: usize, rng: &mut Rng) -> Vec<Vec<f64>> {
        (0..n).map(|_| self.sample(rng)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    #[test]
    fn seeded_samples_repeat() {
        let dist = InputDistribution::standard_normal(4);
        let a = dist.sample_n(10, &mut seeded(3));
        let b = dist.sample_n(10, &mut seeded(3));
        assert_eq!(a, b);
    }

    #[test]
    fn uniform_stays_in_range() {
        let dist = InputDistribution::symmetric(5.0);
        let mut rng = seeded(1);
        assert!(dist.sample_n(1000, &mut rng).iter().all(|x| x[0] >= -5.0 && x[0] < 5.0));
    }

    #[test]
    fn rejects_invalid() {
        assert!(InputDistribution::standard_normal(0).validate().is_err());
        assert!(InputDistribution::symmetric(0.0).validate().is_err());
    }
}
