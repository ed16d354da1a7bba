use super::edm::{edm_coeffs, EdmCoeffs};
use crate::nn::{positional_embedding, MlpCache, MlpConfig, MlpNetwork, Tensor};
use crate::rng::Rng;
use crate::{Error, Result};

pub const NOISE_EMBED_DIM: usize = 32;
/// Clamp range of the log-σ head.
pub const LOG_SIGMA_MIN: f64 = -6.907_755_278_982_137; // ln 1e-3
pub const LOG_SIGMA_MAX: f64 = std::f64::consts::LN_2;

/// Anything that maps noisy pre-squash actions to a predicted clean action and
/// a per-dimension spread.
pub trait Denoise {
    fn action_dim(&self) -> usize;

    /// Returns `(μ, σ)` for each row; `sigmas[r]` is the noise level of row `r`.
    fn denoise(&self, states: &Tensor, noisy: &Tensor, sigmas: &[f64]) -> Result<(Tensor, Tensor)>;
}

/// Noise-level argument of the positional embedding.
pub fn noise_embedding_arg(sigma: f64) -> f64 {
    1000.0 * sigma.ln() / 4.0
}

/// Preconditioned state-conditioned denoiser with a mean head and a log-σ head.
#[derive(Clone, Debug)]
pub struct Denoiser {
    net: MlpNetwork,
    state_dim: usize,
    action_dim: usize,
    sigma_data: f64,
}

/// Everything the backward pass needs from one forward evaluation.
#[derive(Debug)]
pub struct DenoiserPass {
    pub mu: Tensor,
    pub sigma: Tensor,
    pub noisy: Tensor,
    pub coeffs: Vec<EdmCoeffs>,
    pub outputs: Vec<Tensor>,
    cache: MlpCache,
}

impl Denoiser {
    pub fn new(state_dim: usize, action_dim: usize, hidden_units: usize, hidden_layers: usize, sigma_data: f64, rng: &mut Rng) -> Result<Self> {
        if !(sigma_data > 0.0) {
            return Err(Error::Config(format!("sigma_data must be positive, got {sigma_data}")));
        }
        let cfg = MlpConfig::new(state_dim + action_dim + NOISE_EMBED_DIM, vec![action_dim, action_dim]).hidden(hidden_units, hidden_layers);
        Ok(Denoiser { net: MlpNetwork::new(cfg, rng)?, state_dim, action_dim, sigma_data })
    }

    pub fn net(&self) -> &MlpNetwork {
        &self.net
    }

    pub fn net_mut(&mut self) -> &mut MlpNetwork {
        &mut self.net
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn sigma_data(&self) -> f64 {
        self.sigma_data
    }

    /// Network input rows `[state, c_in·u, embed(c_noise)]` and the per-row coefficients.
    pub fn net_input(&self, states: &Tensor, noisy: &Tensor, sigmas: &[f64]) -> Result<(Tensor, Vec<EdmCoeffs>)> {
        let rows = states.rows();
        if states.cols() != self.state_dim || noisy.cols() != self.action_dim || noisy.rows() != rows || sigmas.len() != rows {
            return Err(Error::dim(format!(
                "denoiser expects [B,{}] states, [B,{}] actions and B noise levels; got {:?}, {:?}, {}",
                self.state_dim,
                self.action_dim,
                states.shape(),
                noisy.shape(),
                sigmas.len()
            )));
        }
        let width = self.state_dim + self.action_dim + NOISE_EMBED_DIM;
        let mut data = Vec::with_capacity(rows * width);
        let mut coeffs = Vec::with_capacity(rows);
        for r in 0..rows {
            let c = edm_coeffs(sigmas[r], self.sigma_data);
            data.extend_from_slice(states.row(r));
            data.extend(noisy.row(r).iter().map(|u| c.input * u));
            data.extend(positional_embedding(noise_embedding_arg(sigmas[r]), NOISE_EMBED_DIM)?);
            coeffs.push(c);
        }
        Ok((Tensor::matrix(rows, width, data), coeffs))
    }

    pub fn forward(&self, states: &Tensor, noisy: &Tensor, sigmas: &[f64]) -> Result<DenoiserPass> {
        let (x, coeffs) = self.net_input(states, noisy, sigmas)?;
        let (outputs, cache) = self.net.forward(&x)?;
        let rows = x.rows();
        let mut mu = Tensor::zeros(&[rows, self.action_dim]);
        let mut sigma = Tensor::zeros(&[rows, self.action_dim]);
        for r in 0..rows {
            let c = coeffs[r];
            for j in 0..self.action_dim {
                mu.row_mut(r)[j] = c.skip * noisy.row(r)[j] + c.out * outputs[0].row(r)[j];
                sigma.row_mut(r)[j] = outputs[1].row(r)[j].clamp(LOG_SIGMA_MIN, LOG_SIGMA_MAX).exp();
            }
        }
        if !mu.is_finite() || !sigma.is_finite() {
            return Err(Error::Model("denoiser produced non-finite output".into()));
        }
        Ok(DenoiserPass { mu, sigma, noisy: noisy.clone(), coeffs, outputs, cache })
    }

    /// Accumulates parameter gradients from raw head gradients `[dL/dF, dL/d log σ]`.
    pub fn backward_heads(&mut self, pass: &DenoiserPass, head_grads: &[Tensor]) -> Result<()> {
        self.net.backward(&pass.cache, head_grads)?;
        Ok(())
    }

    /// Accumulates parameter gradients given `dL/dμ` and `dL/dσ`.
    pub fn backward(&mut self, pass: &DenoiserPass, d_mu: &Tensor, d_sigma: &Tensor) -> Result<()> {
        let rows = pass.mu.rows();
        let mut d_f = Tensor::zeros(&[rows, self.action_dim]);
        let mut d_log = Tensor::zeros(&[rows, self.action_dim]);
        for r in 0..rows {
            for j in 0..self.action_dim {
                d_f.row_mut(r)[j] = pass.coeffs[r].out * d_mu.row(r)[j];
                let raw = pass.outputs[1].row(r)[j];
                if (LOG_SIGMA_MIN..=LOG_SIGMA_MAX).contains(&raw) {
                    d_log.row_mut(r)[j] = d_sigma.row(r)[j] * pass.sigma.row(r)[j];
                }
            }
        }
        self.net.backward(&pass.cache, &[d_f, d_log])?;
        Ok(())
    }
}

impl Denoise for Denoiser {
    fn action_dim(&self) -> usize {
        self.action_dim
    }

    fn denoise(&self, states: &Tensor, noisy: &Tensor, sigmas: &[f64]) -> Result<(Tensor, Tensor)> {
        let pass = self.forward(states, noisy, sigmas)?;
        Ok((pass.mu, pass.sigma))
    }
}
