use super::denoiser::{LOG_SIGMA_MAX, LOG_SIGMA_MIN};
use super::objective::{ActorObjective, Pull};
use super::sample::{squash, Sample};
use super::temperature::Temperature;
use super::update::{rows_of, value_gradient, ActorOptimizers, PolicyStats};
use crate::critic::QEstimate;
use crate::nn::{MlpConfig, MlpNetwork, Objective, Tensor};
use crate::rng::{normal, Rng};
use crate::{Error, Result};

/// Tanh-squashed Gaussian policy with mean and log-σ heads.
#[derive(Clone, Debug)]
pub struct GaussianActor {
    net: MlpNetwork,
    action_dim: usize,
}

impl GaussianActor {
    pub fn new(state_dim: usize, action_dim: usize, hidden_units: usize, hidden_layers: usize, rng: &mut Rng) -> Result<Self> {
        let cfg = MlpConfig::new(state_dim, vec![action_dim, action_dim]).hidden(hidden_units, hidden_layers);
        Ok(GaussianActor { net: MlpNetwork::new(cfg, rng)?, action_dim })
    }

    pub fn net(&self) -> &MlpNetwork {
        &self.net
    }

    pub fn net_mut(&mut self) -> &mut MlpNetwork {
        &mut self.net
    }

    /// Squashed mean when `deterministic`, otherwise a squashed draw.
    pub fn act(&self, states: &Tensor, deterministic: bool, rng: &mut Rng) -> Result<Sample> {
        let out = self.net.predict(states)?;
        let mut u = out[0].clone();
        if !deterministic {
            for (x, h) in u.data_mut().iter_mut().zip(out[1].data()) {
                *x += h.clamp(LOG_SIGMA_MIN, LOG_SIGMA_MAX).exp() * normal(rng);
            }
        }
        let actions = Tensor::matrix(u.rows(), self.action_dim, u.data().iter().map(|v| squash(*v)).collect());
        Ok(Sample { actions, pre_tanh: u })
    }

    /// One step on `α·f(x, μ, σ) - Q(s, tanh x)` with `x` reparameterized,
    /// followed by a temperature step.
    pub fn update<C>(&mut self, temperature: &mut Temperature, states: &Tensor, mut critic: C, optimizers: &ActorOptimizers, rng: &mut Rng) -> Result<PolicyStats>
    where
        C: FnMut(&Tensor, &Tensor) -> Result<QEstimate>,
    {
        let rows = states.rows();
        let (out, cache) = self.net.forward(states)?;
        let alpha = temperature.alpha();
        let mut objective = ActorObjective {
            skip: vec![0.0; rows],
            out: vec![1.0; rows],
            noisy: Tensor::zeros(&[rows, self.action_dim]),
            eps: Tensor::matrix(rows, self.action_dim, (0..rows * self.action_dim).map(|_| normal(rng)).collect()),
            pull: Pull::Ascend(Tensor::zeros(&[rows, self.action_dim])),
            alpha,
            weights: vec![1.0; rows],
        };
        let (_, _, x) = objective.sample(&out);
        let (q, g) = value_gradient(&mut critic, states, &x)?;
        objective.pull = Pull::Ascend(g);
        let log_probs = objective.log_probs(&out);
        let log_prob = log_probs.iter().sum::<f64>() / rows as f64;
        let actor_loss = log_probs.iter().zip(&q).map(|(f, q)| alpha * f - q).sum::<f64>() / rows as f64;
        if !actor_loss.is_finite() {
            return Err(Error::Training { param: "actor".into(), msg: format!("non-finite actor loss {actor_loss}") });
        }
        let grads = objective.output_grad(&out);
        debug_assert!(objective.value(&[rows_of(&out[0]), rows_of(&out[1])]).is_finite());
        self.net.zero_grad();
        self.net.backward(&cache, &grads)?;
        optimizers.actor.step(&mut self.net.params_mut())?;
        let alpha_loss = temperature.update(log_prob, &optimizers.temperature)?;
        Ok(PolicyStats { actor_loss, alpha_loss, alpha: temperature.alpha(), log_prob })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::AdamW;
    use crate::rng::seeded;

    #[test]
    fn deterministic_action_is_squashed_mean() {
        let g = GaussianActor::new(2, 1, 8, 1, &mut seeded(1)).unwrap();
        let s = Tensor::matrix(1, 2, vec![0.5, -1.0]);
        let a = g.act(&s, true, &mut seeded(0)).unwrap();
        let mean = g.net().predict(&s).unwrap()[0].data()[0];
        assert_eq!(a.actions.data()[0], mean.tanh());
    }

    #[test]
    fn climbs_a_quadratic_critic() {
        let mut g = GaussianActor::new(2, 1, 16, 2, &mut seeded(2)).unwrap();
        g.net_mut().params_mut().last_mut().unwrap().value.fill(0.0);
        let n = g.net().params().len();
        g.net_mut().params_mut()[n - 3].value.fill(1.0); // mean head bias
        let mut t = Temperature::new(0.01, 0.0, 1).unwrap();
        let opts = ActorOptimizers { actor: AdamW::new(3e-3, 0.0), temperature: AdamW::new(0.0, 0.0) };
        let s = Tensor::matrix(16, 2, vec![0.1; 32]);
        let critic = |_: &Tensor, a: &Tensor| {
            Ok(QEstimate {
                q: a.data().iter().map(|v| -(v - 0.3).powi(2)).collect(),
                action_grad: Tensor::matrix(a.rows(), 1, a.data().iter().map(|v| -2.0 * (v - 0.3)).collect()),
            })
        };
        let mut rng = seeded(3);
        for _ in 0..400 {
            g.update(&mut t, &s, critic, &opts, &mut rng).unwrap();
        }
        let a = g.act(&s, true, &mut rng).unwrap().actions.data()[0];
        assert!((a - 0.3).abs() < 0.05, "{a}");
    }
}
