use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::gaussian::{gaussian_posterior, GaussianPrior};
use crate::error::{Error, Result};

/// Posterior over a mixture of Gaussian-prior regression families.
///
/// `combined_mean = Σᵢ βᵢ · component_means[i]`, with `βᵢ ∝ αᵢ pᵢ(P)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixturePosterior {
    pub beta: Vec<f64>,
    pub component_means: Vec<Vec<f64>>,
    pub combined_mean: Vec<f64>,
    pub log_evidence: Vec<f64>,
}

pub(crate) fn validate_weights(alpha: &[f64], m: usize) -> Result<()> {
    if alpha.len() != m {
        return Err(Error::config(format!(
            "{} mixture weights for {m} components",
            alpha.len()
        )));
    }
    if m == 0 {
        return Err(Error::config("mixture has no components"));
    }
    if alpha.iter().any(|a| !(*a >= 0.0) || !a.is_finite()) {
        return Err(Error::config("mixture weights must be finite and nonnegative"));
    }
    let total: f64 = alpha.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::config(format!(
            "mixture weights sum to {total}, expected 1"
        )));
    }
    Ok(())
}

/// Normalizes `ln αᵢ + ln pᵢ(P)` into posterior component weights.
pub(crate) fn posterior_weights(alpha: &[f64], log_evidence: &[f64]) -> Result<Vec<f64>> {
    let logits: Vec<f64> = alpha
        .iter()
        .zip(log_evidence)
        .map(|(a, le)| if *a == 0.0 { f64::NEG_INFINITY } else { a.ln() + le })
        .collect();
    let lse = crate::linalg::log_sum_exp(&logits);
    if lse == f64::NEG_INFINITY {
        return Err(Error::DegeneratePosterior);
    }
    if !lse.is_finite() {
        return Err(Error::Numeric(format!("log normalizer is {lse}")));
    }
    Ok(logits.iter().map(|l| (l - lse).exp()).collect())
}

pub fn mixture_pme(
    components: &[GaussianPrior],
    alpha: &[f64],
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    eps2: f64,
) -> Result<MixturePosterior> {
    validate_weights(alpha, components.len())?;
    let d = components[0].dim();
    if components.iter().any(|c| c.dim() != d) {
        return Err(Error::shape("mixture components have different dimensions"));
    }
    let posts = components
        .iter()
        .map(|c| gaussian_posterior(c, x, y, eps2))
        .collect::<Result<Vec<_>>>()?;
    let log_evidence: Vec<f64> = posts.iter().map(|p| p.log_evidence).collect();
    let beta = posterior_weights(alpha, &log_evidence)?;
    let component_means: Vec<Vec<f64>> = posts
        .iter()
        .map(|p| p.mean.iter().cloned().collect())
        .collect();
    let combined_mean = convex_combination(&beta, &component_means);
    Ok(MixturePosterior {
        beta,
        component_means,
        combined_mean,
        log_evidence,
    })
}

pub(crate) fn convex_combination(beta: &[f64], means: &[Vec<f64>]) -> Vec<f64> {
    let d = means.first().map_or(0, Vec::len);
    (0..d)
        .map(|j| beta.iter().zip(means).map(|(b, m)| b * m[j]).sum())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gmm_components(d: usize) -> Vec<GaussianPrior> {
        let mut cov = DMatrix::identity(d, d);
        cov[(0, 0)] = 0.0;
        let mut m1 = vec![0.0; d];
        m1[0] = 3.0;
        let mut m2 = vec![0.0; d];
        m2[0] = -3.0;
        vec![
            GaussianPrior::with_mean(m1, cov.clone()).unwrap(),
            GaussianPrior::with_mean(m2, cov).unwrap(),
        ]
    }

    #[test]
    fn empty_prompt_keeps_prior_weights() {
        let comps = gmm_components(10);
        let post = mixture_pme(&comps, &[0.5, 0.5], &DMatrix::zeros(0, 10), &DVector::zeros(0), 1e-6).unwrap();
        assert_eq!(post.beta, vec![0.5, 0.5]);
        assert_eq!(post.combined_mean[0], 0.0);
    }

    #[test]
    fn unequal_weights_shift_first_coordinate() {
        let comps = gmm_components(4);
        let post = mixture_pme(&comps, &[2.0 / 3.0, 1.0 / 3.0], &DMatrix::zeros(0, 4), &DVector::zeros(0), 1e-6).unwrap();
        assert!((post.combined_mean[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_weight_component_is_ignored() {
        let comps = gmm_components(3);
        let x = DMatrix::from_row_slice(1, 3, &[1.0, 0.5, 0.0]);
        let y = DVector::from_vec(vec![-2.5]);
        let post = mixture_pme(&comps, &[1.0, 0.0], &x, &y, 1e-6).unwrap();
        assert_eq!(post.beta[1], 0.0);
        assert_eq!(post.combined_mean, post.component_means[0]);
    }

    #[test]
    fn invalid_weights_rejected() {
        let comps = gmm_components(3);
        let x = DMatrix::zeros(0, 3);
        let y = DVector::zeros(0);
        assert!(mixture_pme(&comps, &[0.7, 0.7], &x, &y, 1e-6).is_err());
        assert!(mixture_pme(&comps, &[1.0], &x, &y, 1e-6).is_err());
        assert!(mixture_pme(&[], &[], &x, &y, 1e-6).is_err());
    }

    #[test]
    fn all_neg_infinite_evidence_is_degenerate() {
        assert!(matches!(
            posterior_weights(&[0.5, 0.5], &[f64::NEG_INFINITY, f64::NEG_INFINITY]),
            Err(Error::DegeneratePosterior)
        ));
    }
}
