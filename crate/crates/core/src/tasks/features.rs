//! Feature maps for the basis-expansion families.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FeatureMap {
    /// `x ↦ x`
    Identity { d: usize },
    /// `[1, cos(πx/L), …, cos(Nπx/L), sin(πx/L), …, sin(Nπx/L)]`, `2N+1` features.
    Fourier { max_freq: usize, half_width: f64 },
    /// Intercept plus the cosine and sine terms of the listed frequencies.
    FourierSubset { freqs: Vec<usize>, half_width: f64 },
    /// `√(2/D) [cos(ω₁ᵀx + δ₁), …, cos(ω_Dᵀx + δ_D)]`
    Rff { omega: Vec<Vec<f64>>, delta: Vec<f64> },
    /// `(xᵢ xⱼ)` for the listed 1-based pairs `i ≤ j`.
    Monomials { d: usize, pairs: Vec<(usize, usize)> },
    /// `[1, x₁, …, x_d, xᵢxⱼ (i ≤ j)]`
    Poly2 { d: usize },
    /// Constant plus `ψ_{n,k}(x) = 2^{n/2} ψ(2ⁿx − k)` for `n ≤ max_level`, `0 ≤ k < 2ⁿ`.
    Haar { max_level: usize },
}

/// All degree-2 monomial index pairs `1 ≤ i ≤ j ≤ d`, ordered by `(i, j)`.
pub fn monomial_pairs(d: usize) -> Vec<(usize, usize)> {
    (1..=d).flat_map(|i| (i..=d).map(move |j| (i, j))).collect()
}

fn haar_mother(t: f64) -> f64 {
    if (0.0..0.5).contains(&t) {
        1.0
    } else if (0.5..1.0).contains(&t) {
        -1.0
    } else {
        0.0
    }
}

impl FeatureMap {
    pub fn all_monomials(d: usize) -> Self {
        FeatureMap::Monomials {
            d,
            pairs: monomial_pairs(d),
        }
    }

    /// Number of features produced.
    pub fn dim(&self) -> usize {
        match self {
            FeatureMap::Identity { d } => *d,
            FeatureMap::Fourier { max_freq, .. } => 2 * max_freq + 1,
            FeatureMap::FourierSubset { freqs, .. } => 2 * freqs.len() + 1,
            FeatureMap::Rff { delta, .. } => delta.len(),
            FeatureMap::Monomials { pairs, .. } => pairs.len(),
            FeatureMap::Poly2 { d } => 1 + d + d * (d + 1) / 2,
            FeatureMap::Haar { max_level } => 1 << (max_level + 1),
        }
    }

    /// Dimension of the raw inputs the map accepts.
    pub fn input_dim(&self) -> usize {
        match self {
            FeatureMap::Identity { d } | FeatureMap::Monomials { d, .. } | FeatureMap::Poly2 { d } => *d,
            FeatureMap::Fourier { .. } | FeatureMap::FourierSubset { .. } | FeatureMap::Haar { .. } => 1,
            FeatureMap::Rff { omega, .. } => omega.first().map_or(0, Vec::len),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            FeatureMap::Fourier { half_width, .. } | FeatureMap::FourierSubset { half_width, .. }
                if !(*half_width > 0.0) =>
            {
                Err(Error::config("Fourier half-width L must be positive"))
            }
            FeatureMap::FourierSubset { freqs, .. } if freqs.iter().any(|&n| n == 0) => {
                Err(Error::config("Fourier subset frequencies are 1-based"))
            }
            FeatureMap::Rff { omega, delta } => {
                if omega.len() != delta.len() || omega.is_empty() {
                    return Err(Error::config("RFF needs one phase per frequency vector"));
                }
                let d = omega[0].len();
                if d == 0 || omega.iter().any(|w| w.len() != d) {
                    return Err(Error::config("RFF frequency vectors must share a nonzero dimension"));
                }
                Ok(())
            }
            FeatureMap::Monomials { d, pairs } => {
                match pairs.iter().find(|(i, j)| !(1 <= *i && i <= j && j <= d)) {
                    Some(p) => Err(Error::config(format!(
                        "monomial pair {p:?} violates 1 ≤ i ≤ j ≤ {d}"
                    ))),
                    None => Ok(()),
                }
            }
            _ => Ok(()),
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        match self {
            FeatureMap::Identity { .. } => x.to_vec(),
            FeatureMap::Fourier {
                max_freq,
                half_width,
            } => {
                let freqs: Vec<usize> = (1..=*max_freq).collect();
                fourier_features(x[0], &freqs, *half_width)
            }
            FeatureMap::FourierSubset { freqs, half_width } => fourier_features(x[0], freqs, *half_width),
            FeatureMap::Rff { omega, delta } => {
                let scale = (2.0 / delta.len() as f64).sqrt();
                omega
                    .iter()
                    .zip(delta)
                    .map(|(w, b)| {
                        let dot: f64 = w.iter().zip(x).map(|(a, c)| a * c).sum();
                        scale * (dot + b).cos()
                    })
                    .collect()
            }
            FeatureMap::Monomials { pairs, .. } => pairs.iter().map(|&(i, j)| x[i - 1] * x[j - 1]).collect(),
            FeatureMap::Poly2 { d } => {
                let mut out = Vec::with_capacity(self.dim());
                out.push(1.0);
                out.extend_from_slice(&x[..*d]);
                out.extend(monomial_pairs(*d).into_iter().map(|(i, j)| x[i - 1] * x[j - 1]));
                out
            }
            FeatureMap::Haar { max_level } => {
                let t = x[0];
                let mut out = Vec::with_capacity(self.dim());
                out.push(1.0);
                for n in 0..=*max_level {
                    let scale = 2f64.powf(n as f64 / 2.0);
                    let two_n = (1u64 << n) as f64;
                    for k in 0..(1u64 << n) {
                        out.push(scale * haar_mother(two_n * t - k as f64));
                    }
                }
                out
            }
        }
    }

    /// Feature-expanded design matrix, one row per input.
    pub fn design(&self, xs: &[Vec<f64>]) -> Result<DMatrix<f64>> {
        let d_in = self.input_dim();
        if let Some(bad) = xs.iter().find(|x| x.len() != d_in) {
            return Err(Error::shape(format!(
                "feature map expects inputs of dimension {d_in}, got {}",
                bad.len()
            )));
        }
        let m = self.dim();
        let mut out = DMatrix::zeros(xs.len(), m);
        for (r, x) in xs.iter().enumerate() {
            for (c, v) in self.apply(x).into_iter().enumerate() {
                out[(r, c)] = v;
            }
        }
        Ok(out)
    }
}

fn fourier_features(x: f64, freqs: &[usize], half_width: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * freqs.len() + 1);
    out.push(1.0);
    out.extend(freqs.iter().map(|&n| (n as f64 * PI * x / half_width).cos()));
    out.extend(freqs.iter().map(|&n| (n as f64 * PI * x / half_width).sin()));
    out
}
