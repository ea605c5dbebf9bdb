use nalgebra::{DMatrix, DVector};
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, canonicalize, check_rows, sym_pinv};
use crate::rng::Rng;

/// Default likelihood variance used to regularize noiseless evidences.
pub const DEFAULT_EVIDENCE_EPS2: f64 = 1e-6;

const EIGEN_FLOOR: f64 = -1e-10;

/// Gaussian prior `N(μ, Σ)` over weight vectors. `Σ` may be singular.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PriorRepr", into = "PriorRepr")]
pub struct GaussianPrior {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
}

#[derive(Serialize, Deserialize)]
struct PriorRepr {
    mean: Vec<f64>,
    cov: Vec<Vec<f64>>,
}

impl TryFrom<PriorRepr> for GaussianPrior {
    type Error = Error;

    fn try_from(r: PriorRepr) -> Result<Self> {
        let d = r.mean.len();
        let cov = linalg::design_matrix(&r.cov, d)?;
        GaussianPrior::new(DVector::from_vec(r.mean), cov)
    }
}

impl From<GaussianPrior> for PriorRepr {
    fn from(p: GaussianPrior) -> Self {
        PriorRepr {
            mean: p.mean.iter().cloned().collect(),
            cov: p
                .cov
                .row_iter()
                .map(|r| r.iter().cloned().collect())
                .collect(),
        }
    }
}

impl GaussianPrior {
    /// Validates symmetry and positive semidefiniteness; eigenvalues in
    /// `[-1e-10, 0)` are clamped to zero.
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let d = mean.len();
        if d == 0 {
            return Err(Error::config("prior dimension must be at least 1"));
        }
        if cov.shape() != (d, d) {
            return Err(Error::shape(format!(
                "covariance is {:?}, mean has length {d}",
                cov.shape()
            )));
        }
        if mean.iter().chain(cov.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Numeric("prior has non-finite entries".into()));
        }
        let scale = cov.amax().max(1.0);
        if (&cov - cov.transpose()).amax() > 1e-10 * scale {
            return Err(Error::config("covariance is not symmetric"));
        }
        let sym = (&cov + cov.transpose()) * 0.5;
        let eig = sym.clone().symmetric_eigen();
        let min = eig.eigenvalues.min();
        if min < EIGEN_FLOOR * scale {
            return Err(Error::config(format!(
                "covariance has negative eigenvalue {min:e}"
            )));
        }
        let cov = if min < 0.0 {
            let clamped = eig.eigenvalues.map(|l| l.max(0.0));
            &eig.eigenvectors * DMatrix::from_diagonal(&clamped) * eig.eigenvectors.transpose()
        } else {
            sym
        };
        Ok(GaussianPrior { mean, cov })
    }

    pub fn standard(d: usize) -> Self {
        GaussianPrior {
            mean: DVector::zeros(d),
            cov: DMatrix::identity(d, d),
        }
    }

    pub fn with_mean(mean: Vec<f64>, cov: DMatrix<f64>) -> Result<Self> {
        Self::new(DVector::from_vec(mean), cov)
    }

    /// `N(0, Σ)` with `Σ = diag(c/1², c/2², …, c/d²)` scaled so that `tr Σ = d`.
    pub fn skewed(d: usize) -> Self {
        let raw: Vec<f64> = (1..=d).map(|i| 1.0 / (i * i) as f64).collect();
        let c = d as f64 / raw.iter().sum::<f64>();
        GaussianPrior {
            mean: DVector::zeros(d),
            cov: DMatrix::from_diagonal(&DVector::from_iterator(d, raw.into_iter().map(|v| v * c))),
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn sample(&self, rng: &mut Rng) -> DVector<f64> {
        let factor = linalg::psd_factor(&self.cov);
        let z = DVector::from_fn(self.dim(), |_, _| rng.sample::<f64, _>(StandardNormal));
        &self.mean + factor * z
    }

    pub fn log_density(&self, w: &DVector<f64>) -> f64 {
        let p = sym_pinv(&self.cov);
        let r = w - &self.mean;
        -0.5 * (r.dot(&(&p.inverse * &r))
            + p.log_det
            + p.rank as f64 * (2.0 * std::f64::consts::PI).ln())
    }
}

/// Posterior mean together with the log marginal likelihood of the prompt.
#[derive(Debug, Clone)]
pub(crate) struct GaussianPosterior {
    pub mean: DVector<f64>,
    pub log_evidence: f64,
}

fn validate(prior: &GaussianPrior, x: &DMatrix<f64>, y: &DVector<f64>, eps2: f64) -> Result<()> {
    check_rows(x, y)?;
    if x.ncols() != prior.dim() {
        return Err(Error::shape(format!(
            "design has {} columns, prior has dimension {}",
            x.ncols(),
            prior.dim()
        )));
    }
    if !(eps2 > 0.0) || !eps2.is_finite() {
        return Err(Error::config(format!(
            "likelihood variance must be positive, got {eps2}"
        )));
    }
    if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
        return Err(Error::Numeric("prompt has non-finite entries".into()));
    }
    Ok(())
}

pub(crate) fn gaussian_posterior(
    prior: &GaussianPrior,
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    eps2: f64,
) -> Result<GaussianPosterior> {
    validate(prior, x, y, eps2)?;
    let (mean, log_evidence) = posterior_svd(prior, x, y, Some(eps2));
    let log_evidence = log_evidence.unwrap_or(0.0);
    if !log_evidence.is_finite() {
        return Err(Error::Numeric(format!("log evidence is {log_evidence}")));
    }
    Ok(GaussianPosterior { mean, log_evidence })
}

/// Works on the SVD of `Z = XL` with `LLᵀ = Σ`, so the condition number of
/// `X` is never squared. `eps2 = None` gives the `ε² → 0` limit, where the
/// evidence is undefined.
fn posterior_svd(
    prior: &GaussianPrior,
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    eps2: Option<f64>,
) -> (DVector<f64>, Option<f64>) {
    let k = x.nrows();
    if k == 0 {
        return (prior.mean.clone(), Some(0.0));
    }
    let (x, y) = canonicalize(x, y);
    let factor = linalg::psd_factor(&prior.cov);
    let z = &x * &factor;
    let resid = &y - &x * &prior.mean;
    let svd = linalg::svd(&z);
    let s = &svd.s;
    let ur = svd.u.transpose() * &resid;
    let coef = match eps2 {
        Some(e) => DVector::from_fn(s.len(), |i, _| s[i] * ur[i] / (s[i] * s[i] + e)),
        None => {
            let cutoff = (k.max(x.ncols()) as f64) * f64::EPSILON * svd.max();
            DVector::from_fn(s.len(), |i, _| if s[i] > cutoff { ur[i] / s[i] } else { 0.0 })
        }
    };
    let mean = &prior.mean + factor * (&svd.v * coef);
    let log_evidence = eps2.map(|e| {
        let in_range: f64 = (0..s.len()).map(|i| ur[i] * ur[i] / (s[i] * s[i] + e)).sum();
        let outside = (resid.norm_squared() - ur.norm_squared()).max(0.0) / e;
        let log_det: f64 =
            s.iter().map(|si| (si * si + e).ln()).sum::<f64>() + (k - s.len()) as f64 * e.ln();
        -0.5 * (in_range + outside + log_det + k as f64 * (2.0 * std::f64::consts::PI).ln())
    });
    (mean, log_evidence)
}

/// Posterior mean of `w` under prior `N(μ, Σ)` and likelihood `y ~ N(Xw, ε²I)`:
/// `μ + ΣXᵀ(XΣXᵀ + ε²I)⁻¹(y − Xμ)`.
///
/// With `ε² → 0` and `Σ = I` this is the minimum-norm interpolant; with general
/// `Σ` it minimizes `(w−μ)ᵀΣ⁻¹(w−μ)` over the constraint set.
pub fn gaussian_pme(
    prior: &GaussianPrior,
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    eps2: f64,
) -> Result<DVector<f64>> {
    Ok(gaussian_posterior(prior, x, y, eps2)?.mean)
}

/// The `ε² → 0` limit of [`gaussian_pme`]: the point of the constraint set
/// `{w : Xw = y}` closest to `μ` in the `Σ⁻¹` metric, or its least-squares
/// analogue when the constraints are inconsistent.
pub fn gaussian_pme_noiseless(prior: &GaussianPrior, x: &DMatrix<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
    validate(prior, x, y, 1.0)?;
    Ok(posterior_svd(prior, x, y, None).0)
}

/// `ln N(y; Xμ, XΣXᵀ + ε²I)`. Zero for an empty prompt.
pub fn gaussian_log_evidence(
    prior: &GaussianPrior,
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    eps2: f64,
) -> Result<f64> {
    Ok(gaussian_posterior(prior, x, y, eps2)?.log_evidence)
}

/// Ridge estimate `(XᵀX + σ²I)⁻¹Xᵀy`, the posterior mean for `w ~ N(0, I)`
/// observed with noise variance `σ²`.
pub fn ridge_pme(noise_var: f64, x: &DMatrix<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
    check_rows(x, y)?;
    if !(noise_var > 0.0) {
        return Err(Error::config(format!(
            "noise variance must be positive, got {noise_var}"
        )));
    }
    let d = x.ncols();
    if x.nrows() == 0 {
        return Ok(DVector::zeros(d));
    }
    let (x, y) = canonicalize(x, y);
    let mut gram = x.transpose() * &x;
    for i in 0..d {
        gram[(i, i)] += noise_var;
    }
    let rhs = x.transpose() * y;
    gram.cholesky()
        .map(|c| c.solve(&rhs))
        .ok_or_else(|| Error::Numeric("ridge system is not positive definite".into()))
}
