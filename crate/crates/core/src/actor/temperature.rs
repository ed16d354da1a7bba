use crate::nn::{AdamW, Parameter, Tensor};
use crate::{Error, Result};

/// Learned entropy coefficient stored as `log α`.
#[derive(Clone, Debug)]
pub struct Temperature {
    pub log_alpha: Parameter,
    pub lambda_ent: f64,
    pub action_dim: usize,
}

impl Temperature {
    pub fn new(alpha: f64, lambda_ent: f64, action_dim: usize) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::Config(format!("initial temperature must be positive, got {alpha}")));
        }
        Ok(Temperature { log_alpha: Parameter::new("log_alpha", Tensor::row_vector(&[alpha.ln()])), lambda_ent, action_dim })
    }

    pub fn alpha(&self) -> f64 {
        self.log_alpha.value.data()[0].exp()
    }

    /// One step on `-α(f̄ - λ_ent·|A|)` with the log-likelihood `f̄` held fixed.
    /// Returns the loss before the step.
    pub fn update(&mut self, mean_log_prob: f64, optimizer: &AdamW) -> Result<f64> {
        let alpha = self.alpha();
        let gap = mean_log_prob - self.lambda_ent * self.action_dim as f64;
        self.log_alpha.grad.data_mut()[0] = -alpha * gap;
        optimizer.step(&mut [&mut self.log_alpha])?;
        Ok(-alpha * gap)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn starts_at_requested_value() {
        let t = Temperature::new(0.2, 0.0, 2).unwrap();
        assert!((t.alpha() - 0.2).abs() < 1e-15);
        assert!(Temperature::new(0.0, 0.0, 2).is_err());
    }

    #[test]
    fn grows_when_likelihood_exceeds_target() {
        let mut t = Temperature::new(0.2, 0.0, 2).unwrap();
        let opt = AdamW::new(1e-2, 0.0);
        t.update(3.0, &opt).unwrap();
        assert!(t.alpha() > 0.2);
        let mut t = Temperature::new(0.2, 0.0, 2).unwrap();
        t.update(-3.0, &opt).unwrap();
        assert!(t.alpha() < 0.2);
    }
}
