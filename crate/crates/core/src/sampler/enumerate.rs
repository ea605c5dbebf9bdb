use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{canonicalize, check_rows};

/// Largest support the exact enumerator will visit.
pub const ENUMERATION_LIMIT: u128 = 1 << 24;

const CHUNK: u64 = 1 << 12;

/// A finite prior support with uniform weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DiscreteSupport {
    Points { points: Vec<Vec<f64>> },
    /// `levels^d`
    Cube { levels: Vec<f64>, d: usize },
    /// `w = z‖z` with `z ∈ levels^half`.
    Concat { levels: Vec<f64>, half: usize },
}

impl DiscreteSupport {
    pub fn sign_vectors(d: usize) -> Self {
        DiscreteSupport::Cube {
            levels: vec![-1.0, 1.0],
            d,
        }
    }

    /// `w = z‖z`, `z ∈ {−2, −1, 1, 2}^{d/2}`.
    pub fn z_task(d: usize) -> Self {
        DiscreteSupport::Concat {
            levels: vec![-2.0, -1.0, 1.0, 2.0],
            half: d / 2,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            DiscreteSupport::Points { points } => points.first().map_or(0, Vec::len),
            DiscreteSupport::Cube { d, .. } => *d,
            DiscreteSupport::Concat { half, .. } => 2 * half,
        }
    }

    /// Number of free coordinates in the mixed-radix index.
    pub(crate) fn digits(&self) -> usize {
        match self {
            DiscreteSupport::Points { .. } => 1,
            DiscreteSupport::Cube { d, .. } => *d,
            DiscreteSupport::Concat { half, .. } => *half,
        }
    }

    pub(crate) fn radix(&self) -> usize {
        match self {
            DiscreteSupport::Points { points } => points.len(),
            DiscreteSupport::Cube { levels, .. } | DiscreteSupport::Concat { levels, .. } => levels.len(),
        }
    }

    /// Support size, saturating at `u128::MAX`.
    pub fn size(&self) -> u128 {
        let radix = self.radix() as u128;
        (0..self.digits()).try_fold(1u128, |acc, _| acc.checked_mul(radix)).unwrap_or(u128::MAX)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            DiscreteSupport::Points { points } => {
                let d = self.dim();
                if points.is_empty() || d == 0 || points.iter().any(|p| p.len() != d) {
                    return Err(Error::config("support points must be nonempty with a shared dimension"));
                }
            }
            DiscreteSupport::Cube { levels, d } if levels.is_empty() || *d == 0 => {
                return Err(Error::config("cube support needs levels and d ≥ 1"));
            }
            DiscreteSupport::Concat { levels, half } if levels.is_empty() || *half == 0 => {
                return Err(Error::config("concatenated support needs levels and d ≥ 2"));
            }
            _ => {}
        }
        Ok(())
    }

    /// Writes the point with mixed-radix index `digits` into `w`.
    pub(crate) fn point(&self, digits: &[usize], w: &mut [f64]) {
        match self {
            DiscreteSupport::Points { points } => w.copy_from_slice(&points[digits[0]]),
            DiscreteSupport::Cube { levels, .. } => {
                for (v, &i) in w.iter_mut().zip(digits) {
                    *v = levels[i];
                }
            }
            DiscreteSupport::Concat { levels, half } => {
                for (j, &i) in digits.iter().enumerate() {
                    w[j] = levels[i];
                    w[j + half] = levels[i];
                }
            }
        }
    }

    fn digits_of(&self, mut index: u64, out: &mut [usize]) {
        let radix = self.radix() as u64;
        for v in out.iter_mut() {
            *v = (index % radix) as usize;
            index /= radix;
        }
    }
}

/// Streaming log-sum-exp accumulator for `Σ exp(lᵢ) wᵢ`.
#[derive(Clone)]
struct Accumulator {
    max: f64,
    total: f64,
    weighted: Vec<f64>,
}

impl Accumulator {
    fn new(d: usize) -> Self {
        Accumulator {
            max: f64::NEG_INFINITY,
            total: 0.0,
            weighted: vec![0.0; d],
        }
    }

    fn rescale(&mut self, new_max: f64) {
        if self.max == f64::NEG_INFINITY {
            self.max = new_max;
            return;
        }
        let f = (self.max - new_max).exp();
        self.total *= f;
        for v in self.weighted.iter_mut() {
            *v *= f;
        }
        self.max = new_max;
    }

    fn push(&mut self, logw: f64, w: &[f64]) {
        if logw > self.max {
            self.rescale(logw);
        }
        let p = (logw - self.max).exp();
        self.total += p;
        for (acc, v) in self.weighted.iter_mut().zip(w) {
            *acc += p * v;
        }
    }

    fn merge(mut self, mut other: Accumulator) -> Accumulator {
        if other.max == f64::NEG_INFINITY {
            return self;
        }
        if other.max > self.max {
            self.rescale(other.max);
        } else {
            other.rescale(self.max);
        }
        self.total += other.total;
        for (a, b) in self.weighted.iter_mut().zip(&other.weighted) {
            *a += b;
        }
        self
    }
}

/// Exact posterior mean under a uniform prior on `support` and Gaussian
/// likelihood `exp(−‖y − Xw‖² / 2ε²)`.
pub fn enumerate_discrete_pme(
    support: &DiscreteSupport,
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    eps2: f64,
) -> Result<DVector<f64>> {
    support.validate()?;
    check_rows(x, y)?;
    if !(eps2 > 0.0) {
        return Err(Error::config("likelihood variance ε² must be positive"));
    }
    let d = support.dim();
    if x.ncols() != d {
        return Err(Error::shape(format!("design has {} columns, support has dimension {d}", x.ncols())));
    }
    let size = support.size();
    if size > ENUMERATION_LIMIT {
        return Err(Error::Capacity {
            size,
            limit: ENUMERATION_LIMIT,
        });
    }
    let (x, y) = canonicalize(x, y);
    let size = size as u64;
    // Fixed chunking keeps the reduction order independent of the thread count.
    let n_chunks = size.div_ceil(CHUNK);
    let partials: Vec<Accumulator> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = Accumulator::new(d);
            let mut digits = vec![0; support.digits()];
            let mut w = vec![0.0; d];
            for index in c * CHUNK..((c + 1) * CHUNK).min(size) {
                support.digits_of(index, &mut digits);
                support.point(&digits, &mut w);
                let mut sq = 0.0;
                for i in 0..x.nrows() {
                    let mut pred = 0.0;
                    for (j, wj) in w.iter().enumerate() {
                        pred += x[(i, j)] * wj;
                    }
                    let r = y[i] - pred;
                    sq += r * r;
                }
                acc.push(-sq / (2.0 * eps2), &w);
            }
            acc
        })
        .collect();
    let acc = partials.into_iter().fold(Accumulator::new(d), Accumulator::merge);
    if !(acc.total > 0.0) || !acc.total.is_finite() {
        return Err(Error::Numeric("enumeration normalizer is not positive".into()));
    }
    Ok(DVector::from_iterator(d, acc.weighted.iter().map(|v| v / acc.total)))
}
