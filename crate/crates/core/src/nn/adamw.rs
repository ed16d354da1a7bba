//! AdamW with decoupled weight decay.

use super::tensor::Parameter;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamW {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl AdamW {
    pub fn new(lr: f64, weight_decay: f64) -> Self {
        AdamW { lr, beta1: 0.9, beta2: 0.999, eps: 1e-8, weight_decay }
    }

    pub fn step(&self, params: &mut [&mut Parameter]) -> Result<()> {
        adamw_step(params, self.lr, self.beta1, self.beta2, self.eps, self.weight_decay)
    }
}

/// One AdamW update over a parameter group; gradients are zeroed afterwards.
///
/// Decay shrinks the value directly (`value *= 1 - lr * weight_decay`) and
/// never enters the moment estimates.
pub fn adamw_step(
    params: &mut [&mut Parameter],
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    weight_decay: f64,
) -> Result<()> {
    // validate the whole group first so a bad gradient leaves every value untouched
    for p in params.iter() {
        if let Some(i) = p.grad.data().iter().position(|g| !g.is_finite()) {
            return Err(Error::Training {
                param: p.name.clone(),
                msg: format!("non-finite gradient {} at index {i}", p.grad.data()[i]),
            });
        }
    }
    if let Some(first) = params.first() {
        let t = first.step_count;
        if let Some(p) = params.iter().find(|p| p.step_count != t) {
            return Err(Error::Usage(format!("parameter `{}` step count out of sync", p.name)));
        }
    }
    for p in params.iter_mut() {
        p.step_count += 1;
        let t = p.step_count as i32;
        let bc1 = 1.0 - beta1.powi(t);
        let bc2 = 1.0 - beta2.powi(t);
        let decay = 1.0 - lr * weight_decay;
        let Parameter { value, grad, m, v, .. } = &mut **p;
        for (((x, g), m), v) in value
            .data_mut()
            .iter_mut()
            .zip(grad.data_mut().iter_mut())
            .zip(m.data_mut())
            .zip(v.data_mut())
        {
            *m = beta1 * *m + (1.0 - beta1) * *g;
            *v = beta2 * *v + (1.0 - beta2) * *g * *g;
            let update = (*m / bc1) / ((*v / bc2).sqrt() + eps);
            *x = *x * decay - lr * update;
            *g = 0.0;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Tensor;

    fn param(vals: &[f64]) -> Parameter {
        Parameter::new("p", Tensor::row_vector(vals))
    }

    #[test]
    fn zero_grad_no_decay_is_fixed_point() {
        let mut p = param(&[1.0, -2.0, 3.5]);
        adamw_step(&mut [&mut p], 0.01, 0.9, 0.999, 1e-8, 0.0).unwrap();
        assert_eq!(p.value.data(), &[1.0, -2.0, 3.5]);
    }

    #[test]
    fn first_step_moves_by_lr_times_sign() {
        let mut p = param(&[0.0, 0.0]);
        p.grad.data_mut().copy_from_slice(&[3.0, -0.2]);
        adamw_step(&mut [&mut p], 0.01, 0.9, 0.999, 1e-8, 0.0).unwrap();
        // m̂ = g, v̂ = g², so the step is lr·g/(|g| + eps)
        assert!((p.value.data()[0] + 0.01 * 3.0 / (3.0 + 1e-8)).abs() < 1e-15);
        assert!((p.value.data()[1] - 0.01 * 0.2 / (0.2 + 1e-8)).abs() < 1e-15);
        assert!(p.grad.data().iter().all(|g| *g == 0.0));
    }

    #[test]
    fn decay_is_multiplicative_and_decoupled() {
        let mut p = param(&[2.0, -4.0]);
        adamw_step(&mut [&mut p], 0.01, 0.9, 0.999, 1e-8, 0.1).unwrap();
        assert_eq!(p.value.data(), &[2.0 * (1.0 - 0.001), -4.0 * (1.0 - 0.001)]);
        assert!(p.m.data().iter().all(|m| *m == 0.0));
    }

    #[test]
    fn non_finite_grad_names_parameter() {
        let mut a = param(&[1.0]);
        let mut b = Parameter::new("critic.head0.weight", Tensor::row_vector(&[1.0]));
        b.grad.data_mut()[0] = f64::NAN;
        let err = adamw_step(&mut [&mut a, &mut b], 0.1, 0.9, 0.999, 1e-8, 0.0).unwrap_err();
        match err {
            Error::Training { param, .. } => assert_eq!(param, "critic.head0.weight"),
            e => panic!("unexpected {e}"),
        }
        assert_eq!(a.value.data(), &[1.0]);
    }
}
