use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::seeded;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MlpConfig {
    pub hidden: usize,
    pub steps: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for MlpConfig {
    fn default() -> Self {
        MlpConfig {
            hidden: 100,
            steps: 100,
            learning_rate: 5e-3,
            seed: 0,
        }
    }
}

/// `f(x) = Σᵢ aᵢ ReLU(wᵢᵀx + bᵢ) + c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub w: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub a: Vec<f64>,
    pub c: f64,
}

impl Mlp {
    /// He-initialized hidden layer, `N(0, 1/r)` output layer, zero biases.
    pub fn init(d: usize, hidden: usize, seed: u64) -> Self {
        let mut rng = seeded(seed);
        let w_sd = (2.0 / d.max(1) as f64).sqrt();
        let a_sd = (1.0 / hidden as f64).sqrt();
        let w = (0..hidden)
            .map(|_| (0..d).map(|_| w_sd * rng.sample::<f64, _>(StandardNormal)).collect())
            .collect();
        let a = (0..hidden).map(|_| a_sd * rng.sample::<f64, _>(StandardNormal)).collect();
        Mlp {
            w,
            b: vec![0.0; hidden],
            a,
            c: 0.0,
        }
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        self.c
            + self
                .w
                .iter()
                .zip(&self.b)
                .zip(&self.a)
                .map(|((wi, bi), ai)| ai * (dot(wi, x) + bi).max(0.0))
                .sum::<f64>()
    }

    /// Parameters flattened as `[w (row-major), b, a, c]`.
    pub fn params(&self) -> Vec<f64> {
        let mut p: Vec<f64> = self.w.iter().flatten().cloned().collect();
        p.extend(&self.b);
        p.extend(&self.a);
        p.push(self.c);
        p
    }

    pub fn set_params(&mut self, p: &[f64]) {
        let mut it = p.iter().cloned();
        for row in self.w.iter_mut() {
            for v in row.iter_mut() {
                *v = it.next().unwrap();
            }
        }
        for v in self.b.iter_mut().chain(self.a.iter_mut()) {
            *v = it.next().unwrap();
        }
        self.c = it.next().unwrap();
    }

    /// Mean squared error and its gradient in [`Mlp::params`] order.
    pub fn loss_and_grad(&self, xs: &[Vec<f64>], ys: &[f64]) -> (f64, Vec<f64>) {
        let r = self.a.len();
        let d = self.w.first().map_or(0, Vec::len);
        let n = xs.len().max(1) as f64;
        let mut gw = vec![0.0; r * d];
        let mut gb = vec![0.0; r];
        let mut ga = vec![0.0; r];
        let mut gc = 0.0;
        let mut loss = 0.0;
        let mut pre = vec![0.0; r];
        for (x, y) in xs.iter().zip(ys) {
            let mut out = self.c;
            for i in 0..r {
                pre[i] = dot(&self.w[i], x) + self.b[i];
                out += self.a[i] * pre[i].max(0.0);
            }
            let err = out - y;
            loss += err * err;
            let g = 2.0 * err / n;
            gc += g;
            for i in 0..r {
                if pre[i] > 0.0 {
                    ga[i] += g * pre[i];
                    let gh = g * self.a[i];
                    gb[i] += gh;
                    for (gv, xv) in gw[i * d..(i + 1) * d].iter_mut().zip(x) {
                        *gv += gh * xv;
                    }
                }
            }
        }
        gw.extend(gb);
        gw.extend(ga);
        gw.push(gc);
        (loss / n, gw)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| u * v).sum()
}

/// Trained network with its loss history (`losses[0]` is the initial loss).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpFit {
    pub model: Mlp,
    pub losses: Vec<f64>,
}

/// Full-batch Adam on the mean squared error of a 2-layer ReLU network.
pub fn mlp_fit(xs: &[Vec<f64>], ys: &[f64], config: &MlpConfig) -> Result<MlpFit> {
    if config.steps == 0 {
        return Err(Error::config("MLP training needs at least one step"));
    }
    if config.hidden == 0 {
        return Err(Error::config("MLP hidden width must be at least 1"));
    }
    if xs.len() != ys.len() {
        return Err(Error::shape(format!("{} inputs and {} targets", xs.len(), ys.len())));
    }
    let d = xs.first().map_or(0, Vec::len);
    if xs.iter().any(|x| x.len() != d) {
        return Err(Error::shape("MLP inputs have mixed dimensions"));
    }
    let mut model = Mlp::init(d, config.hidden, config.seed);
    if xs.is_empty() {
        return Ok(MlpFit { model, losses: vec![0.0] });
    }
    let (beta1, beta2, eps): (f64, f64, f64) = (0.9, 0.999, 1e-8);
    let mut p = model.params();
    let mut m = vec![0.0; p.len()];
    let mut v = vec![0.0; p.len()];
    let mut losses = Vec::with_capacity(config.steps + 1);
    for t in 1..=config.steps {
        let (loss, g) = model.loss_and_grad(xs, ys);
        if !loss.is_finite() {
            return Err(Error::Numeric(format!("MLP loss diverged at step {t}")));
        }
        losses.push(loss);
        let (c1, c2) = (1.0 - beta1.powi(t as i32), 1.0 - beta2.powi(t as i32));
        for i in 0..p.len() {
            m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
            v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
            p[i] -= config.learning_rate * (m[i] / c1) / ((v[i] / c2).sqrt() + eps);
        }
        model.set_params(&p);
    }
    let (final_loss, _) = model.loss_and_grad(xs, ys);
    if !final_loss.is_finite() {
        return Err(Error::Numeric("MLP loss diverged".into()));
    }
    losses.push(final_loss);
    Ok(MlpFit { model, losses })
}
