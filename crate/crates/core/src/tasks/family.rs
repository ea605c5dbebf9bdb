use std::collections::BTreeSet;
use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::distr::{Distribution, weighted::WeightedIndex};
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::features::FeatureMap;
use crate::bayes::{DiscreteTaskSet, GaussianPrior};
use crate::error::{Error, Result};
use crate::rng::{seeded, Rng};

/// One function family: a prior over functions `f: R^d → R`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum FamilyKind {
    /// `w ~ prior`, `f(x) = wᵀx`.
    DenseLinear { prior: GaussianPrior },
    /// `w ~ N(0, Σ)` with eigenvalues `∝ 1/i²`.
    SkewedCovLinear { d: usize },
    /// Standard-normal `w` with all but `s` uniformly chosen coordinates zeroed.
    SparseLinear { d: usize, s: usize },
    /// `w` uniform on `{−1, +1}^d`.
    SignVector { d: usize },
    /// `w = z‖z` with `z` uniform on `{−2, −1, 1, 2}^{d/2}`.
    ZConcat { d: usize },
    /// `W = ABᵀ` with `A, B ∈ R^{q×r}` standard normal; `w = vec(W)` row-major, `d = q²`.
    LowRank { q: usize, r: usize },
    /// Component `i ~ α`, then `w ~ components[i]`.
    GmmLinear {
        components: Vec<GaussianPrior>,
        alpha: Vec<f64>,
    },
    /// Standard-normal coefficients on `Φ_N`, scalar input.
    FourierSeries { max_freq: usize, half_width: f64 },
    /// Standard-normal coefficients on the intercept and the frequencies in `freqs ⊆ {1..N}`.
    FourierSubset {
        freqs: Vec<usize>,
        max_freq: usize,
        half_width: f64,
    },
    /// Standard-normal coefficients on frozen random Fourier features.
    RandomFourierFeatures { omega: Vec<Vec<f64>>, delta: Vec<f64> },
    /// Standard-normal coefficients on the monomials `xᵢxⱼ`, `(i, j) ∈ pairs`.
    MonomialSubset { d: usize, pairs: Vec<(usize, usize)> },
    /// Standard-normal coefficients on the Haar basis up to `max_level`, `x ~ U(0, 1)`.
    HaarWavelet { max_level: usize },
    /// Full binary tree splitting on `sign(x_j)`, leaves `~ N(0, 1)`.
    DecisionTree { depth: usize, d: usize },
    /// `f(x) = Σᵢ aᵢ ReLU(wᵢᵀx)`, `aᵢ ~ N(0, 2/r)`, `wᵢ ~ N(0, I)`.
    TwoLayerNn { hidden: usize, d: usize },
    /// `w` uniform over a fixed task set, outputs observed with noise `σ²`.
    NoisyLinearDiscrete { tasks: DiscreteTaskSet },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionFamilySpec {
    #[serde(flatten)]
    pub kind: FamilyKind,
    #[serde(default)]
    pub normalize: bool,
}

/// A sampled function with its ground-truth parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FunctionInstance {
    Linear {
        w: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        component: Option<usize>,
    },
    Basis { map: FeatureMap, w: Vec<f64> },
    /// Heap-ordered tree: node `i` has children `2i+1` (`x_f ≤ 0`) and `2i+2`.
    Tree {
        features: Vec<usize>,
        leaves: Vec<f64>,
    },
    Network {
        hidden: Vec<Vec<f64>>,
        output: Vec<f64>,
    },
}

fn normal(rng: &mut Rng) -> f64 {
    rng.sample(StandardNormal)
}

fn normals(n: usize, rng: &mut Rng) -> Vec<f64> {
    (0..n).map(|_| normal(rng)).collect()
}

impl FunctionInstance {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            FunctionInstance::Linear { w, .. } => w.iter().zip(x).map(|(a, b)| a * b).sum(),
            FunctionInstance::Basis { map, w } => map.apply(x).iter().zip(w).map(|(a, b)| a * b).sum(),
            FunctionInstance::Tree { features, leaves } => {
                let mut node = 0;
                while node < features.len() {
                    node = if x[features[node]] <= 0.0 { 2 * node + 1 } else { 2 * node + 2 };
                }
                leaves[node - features.len()]
            }
            FunctionInstance::Network { hidden, output } => hidden
                .iter()
                .zip(output)
                .map(|(row, a)| {
                    let pre: f64 = row.iter().zip(x).map(|(u, v)| u * v).sum();
                    a * pre.max(0.0)
                })
                .sum(),
        }
    }

    /// Linear or basis coefficients, when the function has them.
    pub fn weights(&self) -> Option<&[f64]> {
        match self {
            FunctionInstance::Linear { w, .. } | FunctionInstance::Basis { w, .. } => Some(w),
            _ => None,
        }
    }
}

impl FamilyKind {
    /// Random Fourier features with `ω ~ N(0, I_d)` and `δ ~ U(0, 2π)`, frozen at construction.
    pub fn random_fourier_features(d: usize, n_features: usize, seed: u64) -> Self {
        let mut rng = seeded(seed);
        let omega = (0..n_features).map(|_| normals(d, &mut rng)).collect();
        let delta = (0..n_features).map(|_| rng.random_range(0.0..2.0 * PI)).collect();
        FamilyKind::RandomFourierFeatures { omega, delta }
    }

    /// The two-component GMM with means `(±3, 0, …, 0)` and shared covariance
    /// equal to the identity with the first diagonal entry set to zero.
    pub fn gmm_pm3(d: usize, alpha: Vec<f64>) -> Result<Self> {
        if d == 0 {
            return Err(Error::config("d must be at least 1"));
        }
        let mut cov = DMatrix::identity(d, d);
        cov[(0, 0)] = 0.0;
        let mut m1 = vec![0.0; d];
        m1[0] = 3.0;
        let mut m2 = vec![0.0; d];
        m2[0] = -3.0;
        Ok(FamilyKind::GmmLinear {
            components: vec![
                GaussianPrior::with_mean(m1, cov.clone())?,
                GaussianPrior::with_mean(m2, cov)?,
            ],
            alpha,
        })
    }

    pub fn input_dim(&self) -> usize {
        match self {
            FamilyKind::DenseLinear { prior } => prior.dim(),
            FamilyKind::SkewedCovLinear { d }
            | FamilyKind::SparseLinear { d, .. }
            | FamilyKind::SignVector { d }
            | FamilyKind::ZConcat { d }
            | FamilyKind::MonomialSubset { d, .. }
            | FamilyKind::DecisionTree { d, .. }
            | FamilyKind::TwoLayerNn { d, .. } => *d,
            FamilyKind::LowRank { q, .. } => q * q,
            FamilyKind::GmmLinear { components, .. } => components.first().map_or(0, GaussianPrior::dim),
            FamilyKind::FourierSeries { .. } | FamilyKind::FourierSubset { .. } | FamilyKind::HaarWavelet { .. } => 1,
            FamilyKind::RandomFourierFeatures { omega, .. } => omega.first().map_or(0, Vec::len),
            FamilyKind::NoisyLinearDiscrete { tasks } => tasks.weights.first().map_or(0, Vec::len),
        }
    }

    /// Feature map of a basis-expansion family.
    pub fn feature_map(&self) -> Option<FeatureMap> {
        match self {
            FamilyKind::FourierSeries { max_freq, half_width } => Some(FeatureMap::Fourier {
                max_freq: *max_freq,
                half_width: *half_width,
            }),
            FamilyKind::FourierSubset { freqs, half_width, .. } => Some(FeatureMap::FourierSubset {
                freqs: freqs.clone(),
                half_width: *half_width,
            }),
            FamilyKind::RandomFourierFeatures { omega, delta } => Some(FeatureMap::Rff {
                omega: omega.clone(),
                delta: delta.clone(),
            }),
            FamilyKind::MonomialSubset { d, pairs } => Some(FeatureMap::Monomials {
                d: *d,
                pairs: pairs.clone(),
            }),
            FamilyKind::HaarWavelet { max_level } => Some(FeatureMap::Haar { max_level: *max_level }),
            _ => None,
        }
    }

    /// Observation noise variance, nonzero only for the noisy discrete family.
    pub fn noise_var(&self) -> f64 {
        match self {
            FamilyKind::NoisyLinearDiscrete { tasks } => tasks.noise_var,
            _ => 0.0,
        }
    }
}

impl FunctionFamilySpec {
    pub fn new(kind: FamilyKind) -> Self {
        FunctionFamilySpec { kind, normalize: false }
    }

    pub fn normalized(kind: FamilyKind) -> Self {
        FunctionFamilySpec { kind, normalize: true }
    }

    pub fn d(&self) -> usize {
        self.kind.input_dim()
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: usize| {
            if v == 0 {
                Err(Error::config(format!("{name} must be at least 1")))
            } else {
                Ok(())
            }
        };
        match &self.kind {
            FamilyKind::DenseLinear { .. } => Ok(()),
            FamilyKind::SkewedCovLinear { d } | FamilyKind::SignVector { d } => positive("d", *d),
            FamilyKind::SparseLinear { d, s } => {
                if !(1 <= *s && s <= d) {
                    return Err(Error::config(format!("sparsity s = {s} violates 1 ≤ s ≤ d = {d}")));
                }
                Ok(())
            }
            FamilyKind::ZConcat { d } => {
                if *d == 0 || d % 2 != 0 {
                    return Err(Error::config(format!("concatenated task needs an even d ≥ 2, got {d}")));
                }
                Ok(())
            }
            FamilyKind::LowRank { q, r } => {
                if !(1 <= *r && r <= q) {
                    return Err(Error::config(format!("rank r = {r} violates 1 ≤ r ≤ q = {q}")));
                }
                Ok(())
            }
            FamilyKind::GmmLinear { components, alpha } => {
                crate::bayes::validate_weights(alpha, components.len())?;
                let d = components[0].dim();
                if components.iter().any(|c| c.dim() != d) {
                    return Err(Error::config("GMM components have different dimensions"));
                }
                Ok(())
            }
            FamilyKind::FourierSeries { max_freq, .. } => {
                positive("N", *max_freq)?;
                self.kind.feature_map().unwrap().validate()
            }
            FamilyKind::FourierSubset { freqs, max_freq, .. } => {
                if let Some(n) = freqs.iter().find(|&&n| n == 0 || n > *max_freq) {
                    return Err(Error::config(format!("frequency {n} is outside 1..={max_freq}")));
                }
                if freqs.iter().collect::<BTreeSet<_>>().len() != freqs.len() {
                    return Err(Error::config("Fourier subset frequencies must be distinct"));
                }
                self.kind.feature_map().unwrap().validate()
            }
            FamilyKind::RandomFourierFeatures { .. } | FamilyKind::MonomialSubset { .. } => {
                self.kind.feature_map().unwrap().validate()
            }
            FamilyKind::HaarWavelet { .. } => Ok(()),
            FamilyKind::DecisionTree { depth, d } => {
                positive("depth", *depth)?;
                if *depth > 20 {
                    return Err(Error::config(format!("tree depth {depth} exceeds 20")));
                }
                positive("d", *d)
            }
            FamilyKind::TwoLayerNn { hidden, d } => {
                positive("hidden width r", *hidden)?;
                positive("d", *d)
            }
            FamilyKind::NoisyLinearDiscrete { tasks } => tasks.validate(),
        }
    }

    /// Output scale that the normalized family divides by.
    pub fn normalization_constant(&self) -> Result<f64> {
        let sqrt = |v: usize| (v as f64).sqrt();
        match &self.kind {
            FamilyKind::DenseLinear { prior } => Ok(sqrt(prior.dim())),
            FamilyKind::SignVector { d } => Ok(sqrt(*d)),
            FamilyKind::SparseLinear { s, .. } => Ok(sqrt(*s)),
            FamilyKind::SkewedCovLinear { d } => Ok(sqrt(*d)),
            FamilyKind::FourierSeries { max_freq, .. } => Ok(*max_freq as f64),
            FamilyKind::MonomialSubset { pairs, .. } => Ok(sqrt(pairs.len())),
            FamilyKind::DecisionTree { .. } => Ok(1.0),
            FamilyKind::TwoLayerNn { hidden, d } => Ok((*d as f64 * *hidden as f64 / 2.0).sqrt()),
            other => Err(Error::Unsupported(format!(
                "no normalization constant is defined for {}",
                variant_name(other)
            ))),
        }
    }

    pub fn sample_function(&self, seed: u64) -> Result<FunctionInstance> {
        self.validate()?;
        let scale = if self.normalize { 1.0 / self.normalization_constant()? } else { 1.0 };
        let mut rng = seeded(seed);
        let rng = &mut rng;
        let linear = |w: Vec<f64>| FunctionInstance::Linear {
            w: w.into_iter().map(|v| v * scale).collect(),
            component: None,
        };
        let basis = |map: FeatureMap, rng: &mut Rng| {
            let w = normals(map.dim(), rng).into_iter().map(|v| v * scale).collect();
            FunctionInstance::Basis { map, w }
        };
        Ok(match &self.kind {
            FamilyKind::DenseLinear { prior } => linear(prior.sample(rng).iter().cloned().collect()),
            FamilyKind::SkewedCovLinear { d } => {
                linear(GaussianPrior::skewed(*d).sample(rng).iter().cloned().collect())
            }
            FamilyKind::SparseLinear { d, s } => {
                let mut w = normals(*d, rng);
                let keep: BTreeSet<usize> = rand::seq::index::sample(rng, *d, *s).into_iter().collect();
                for (j, v) in w.iter_mut().enumerate() {
                    if !keep.contains(&j) {
                        *v = 0.0;
                    }
                }
                linear(w)
            }
            FamilyKind::SignVector { d } => {
                linear((0..*d).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect())
            }
            FamilyKind::ZConcat { d } => {
                const LEVELS: [f64; 4] = [-2.0, -1.0, 1.0, 2.0];
                let z: Vec<f64> = (0..d / 2).map(|_| LEVELS[rng.random_range(0..4)]).collect();
                linear(z.iter().chain(&z).cloned().collect())
            }
            FamilyKind::LowRank { q, r } => {
                let a = DMatrix::from_fn(*q, *r, |_, _| normal(rng));
                let b = DMatrix::from_fn(*q, *r, |_, _| normal(rng));
                let w = a * b.transpose();
                linear(w.transpose().iter().cloned().collect())
            }
            FamilyKind::GmmLinear { components, alpha } => {
                let dist = WeightedIndex::new(alpha).map_err(|e| Error::config(e.to_string()))?;
                let i = dist.sample(rng);
                FunctionInstance::Linear {
                    w: components[i].sample(rng).iter().map(|v| v * scale).collect(),
                    component: Some(i),
                }
            }
            FamilyKind::FourierSeries { .. }
            | FamilyKind::FourierSubset { .. }
            | FamilyKind::RandomFourierFeatures { .. }
            | FamilyKind::MonomialSubset { .. }
            | FamilyKind::HaarWavelet { .. } => basis(self.kind.feature_map().unwrap(), rng),
            FamilyKind::DecisionTree { depth, d } => {
                let internal = (1usize << depth) - 1;
                let features = (0..internal).map(|_| rng.random_range(0..*d)).collect();
                let leaves = normals(1 << depth, rng).into_iter().map(|v| v * scale).collect();
                FunctionInstance::Tree { features, leaves }
            }
            FamilyKind::TwoLayerNn { hidden, d } => {
                let rows = (0..*hidden).map(|_| normals(*d, rng)).collect();
                // Normalized networks use unit-variance output weights so that
                // dividing by √(dr/2) gives unit output variance.
                let out_sd = if self.normalize { scale } else { (2.0 / *hidden as f64).sqrt() };
                let output = normals(*hidden, rng).into_iter().map(|v| v * out_sd).collect();
                FunctionInstance::Network { hidden: rows, output }
            }
            FamilyKind::NoisyLinearDiscrete { tasks } => {
                let j = rng.random_range(0..tasks.len());
                FunctionInstance::Linear {
                    w: tasks.weights[j].iter().map(|v| v * scale).collect(),
                    component: Some(j),
                }
            }
        })
    }
}

pub(crate) fn variant_name(kind: &FamilyKind) -> &'static str {
    match kind {
        FamilyKind::DenseLinear { .. } => "dense-linear",
        FamilyKind::SkewedCovLinear { .. } => "skewed-cov-linear",
        FamilyKind::SparseLinear { .. } => "sparse-linear",
        FamilyKind::SignVector { .. } => "sign-vector",
        FamilyKind::ZConcat { .. } => "z-concat",
        FamilyKind::LowRank { .. } => "low-rank",
        FamilyKind::GmmLinear { .. } => "gmm-linear",
        FamilyKind::FourierSeries { .. } => "fourier-series",
        FamilyKind::FourierSubset { .. } => "fourier-subset",
        FamilyKind::RandomFourierFeatures { .. } => "random-fourier-features",
        FamilyKind::MonomialSubset { .. } => "monomial-subset",
        FamilyKind::HaarWavelet { .. } => "haar-wavelet",
        FamilyKind::DecisionTree { .. } => "decision-tree",
        FamilyKind::TwoLayerNn { .. } => "two-layer-nn",
        FamilyKind::NoisyLinearDiscrete { .. } => "noisy-linear-discrete",
    }
}
