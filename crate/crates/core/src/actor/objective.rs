use super::denoiser::{LOG_SIGMA_MAX, LOG_SIGMA_MIN};
use super::likelihood::{tanh_log_prob, tanh_log_prob_partials};
use crate::nn::{Objective, Real, Rows, Tensor};

/// What the reparameterized sample `x = μ + ε′σ` is pushed toward.
#[derive(Clone, Debug)]
pub enum Pull {
    /// `Σ (x - target)²` with the target held fixed.
    Regress(Tensor),
    /// `-Σ g·x` with a fixed value gradient `g`; the first-order surrogate of `-Q(tanh x)`.
    Ascend(Tensor),
}

/// Actor loss over the two network heads `[F, log σ]`:
/// `μ = skip·u + out·F`, `σ = exp(clamp(log σ))`, `x = μ + ε′σ`,
/// per row `w·(pull(x) + α·f(x, μ, σ))`, averaged over rows.
#[derive(Clone, Debug)]
pub struct ActorObjective {
    pub skip: Vec<f64>,
    pub out: Vec<f64>,
    pub noisy: Tensor,
    pub eps: Tensor,
    pub pull: Pull,
    pub alpha: f64,
    pub weights: Vec<f64>,
}

impl ActorObjective {
    fn rows(&self) -> usize {
        self.skip.len()
    }

    /// `(μ, σ, x)` in `f64` for head outputs.
    pub fn sample(&self, outputs: &[Tensor]) -> (Tensor, Tensor, Tensor) {
        let (rows, dim) = (self.rows(), self.noisy.cols());
        let mut mu = Tensor::zeros(&[rows, dim]);
        let mut sigma = Tensor::zeros(&[rows, dim]);
        let mut x = Tensor::zeros(&[rows, dim]);
        for r in 0..rows {
            for j in 0..dim {
                let m = self.skip[r] * self.noisy.row(r)[j] + self.out[r] * outputs[0].row(r)[j];
                let s = outputs[1].row(r)[j].clamp(LOG_SIGMA_MIN, LOG_SIGMA_MAX).exp();
                mu.row_mut(r)[j] = m;
                sigma.row_mut(r)[j] = s;
                x.row_mut(r)[j] = m + self.eps.row(r)[j] * s;
            }
        }
        (mu, sigma, x)
    }

    /// Per-row log-likelihoods `f(x, μ, σ)`.
    pub fn log_probs(&self, outputs: &[Tensor]) -> Vec<f64> {
        let (mu, sigma, x) = self.sample(outputs);
        (0..self.rows()).map(|r| tanh_log_prob(x.row(r), mu.row(r), sigma.row(r))).collect()
    }
}

impl Objective for ActorObjective {
    fn value<R: Real>(&self, outputs: &[Rows<R>]) -> R {
        let (lo, hi) = (R::from_f64(LOG_SIGMA_MIN), R::from_f64(LOG_SIGMA_MAX));
        let mut total = R::zero();
        for r in 0..self.rows() {
            let (skip, out) = (R::from_f64(self.skip[r]), R::from_f64(self.out[r]));
            let mut mu = Vec::new();
            let mut sigma = Vec::new();
            let mut x = Vec::new();
            let mut pull = R::zero();
            for j in 0..self.noisy.cols() {
                let m = skip * R::from_f64(self.noisy.row(r)[j]) + out * outputs[0][r][j];
                let s = outputs[1][r][j].max(lo).min(hi).exp();
                let xv = m + R::from_f64(self.eps.row(r)[j]) * s;
                pull = pull
                    + match &self.pull {
                        Pull::Regress(t) => (xv - R::from_f64(t.row(r)[j])) * (xv - R::from_f64(t.row(r)[j])),
                        Pull::Ascend(g) => -(R::from_f64(g.row(r)[j]) * xv),
                    };
                mu.push(m);
                sigma.push(s);
                x.push(xv);
            }
            let f = tanh_log_prob(&x, &mu, &sigma);
            total = total + R::from_f64(self.weights[r]) * (pull + R::from_f64(self.alpha) * f);
        }
        total / R::from_f64(self.rows() as f64)
    }

    fn output_grad(&self, outputs: &[Tensor]) -> Vec<Tensor> {
        let (rows, dim) = (self.rows(), self.noisy.cols());
        let (mu, sigma, x) = self.sample(outputs);
        let mut d_f = Tensor::zeros(&[rows, dim]);
        let mut d_log = Tensor::zeros(&[rows, dim]);
        for r in 0..rows {
            let scale = self.weights[r] / rows as f64;
            for j in 0..dim {
                let (xv, m, s) = (x.row(r)[j], mu.row(r)[j], sigma.row(r)[j]);
                let (fx, fm, fs) = tanh_log_prob_partials(xv, m, s);
                let pull = match &self.pull {
                    Pull::Regress(t) => 2.0 * (xv - t.row(r)[j]),
                    Pull::Ascend(g) => -g.row(r)[j],
                };
                let dx = pull + self.alpha * fx;
                let dmu = dx + self.alpha * fm;
                let dsig = dx * self.eps.row(r)[j] + self.alpha * fs;
                d_f.row_mut(r)[j] = scale * self.out[r] * dmu;
                let raw = outputs[1].row(r)[j];
                if (LOG_SIGMA_MIN..=LOG_SIGMA_MAX).contains(&raw) {
                    d_log.row_mut(r)[j] = scale * dsig * s;
                }
            }
        }
        vec![d_f, d_log]
    }
}

/// Weighted denoising regression `Σ_r w_r ‖skip·u_r + out·F_r - clean_r‖² / B`
/// on the mean head only.
#[derive(Clone, Debug)]
pub struct RegressionObjective {
    pub skip: Vec<f64>,
    pub out: Vec<f64>,
    pub noisy: Tensor,
    pub clean: Tensor,
    pub weights: Vec<f64>,
}

impl Objective for RegressionObjective {
    fn value<R: Real>(&self, outputs: &[Rows<R>]) -> R {
        let mut total = R::zero();
        for r in 0..self.skip.len() {
            let mut sq = R::zero();
            for j in 0..self.noisy.cols() {
                let d = R::from_f64(self.skip[r]) * R::from_f64(self.noisy.row(r)[j]) + R::from_f64(self.out[r]) * outputs[0][r][j]
                    - R::from_f64(self.clean.row(r)[j]);
                sq = sq + d * d;
            }
            total = total + R::from_f64(self.weights[r]) * sq;
        }
        total / R::from_f64(self.skip.len() as f64)
    }

    fn output_grad(&self, outputs: &[Tensor]) -> Vec<Tensor> {
        let rows = self.skip.len();
        let dim = self.noisy.cols();
        let mut d_f = Tensor::zeros(&[rows, dim]);
        for r in 0..rows {
            for j in 0..dim {
                let d = self.skip[r] * self.noisy.row(r)[j] + self.out[r] * outputs[0].row(r)[j] - self.clean.row(r)[j];
                d_f.row_mut(r)[j] = 2.0 * self.weights[r] * d * self.out[r] / rows as f64;
            }
        }
        vec![d_f, Tensor::zeros(&[rows, dim])]
    }
}
