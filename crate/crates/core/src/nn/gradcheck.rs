use super::mlp::MlpNetwork;
use super::precise::{DoubleDouble, Real};
use super::reference::{reference_forward, Rows};
use super::tensor::Tensor;
use crate::{Error, Result};

/// `|a - b| / (|a| + |b| + 1e-12)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / (analytic.abs() + numeric.abs() + 1e-12)
}

/// A scalar loss over a network's head outputs.
pub trait Objective {
    /// Loss value. Generic so the oracle can evaluate it in extended precision.
    fn value<R: Real>(&self, outputs: &[Rows<R>]) -> R;

    /// `d loss / d output` for every head, fed to the backward pass.
    fn output_grad(&self, outputs: &[Tensor]) -> Vec<Tensor>;
}

/// Largest relative error, over every parameter entry, between the
/// backpropagated gradient and a central difference of step `eps`.
///
/// The central differences run through [`reference_forward`] in double-double
/// arithmetic, independent of the batched forward/backward path. Existing
/// gradients in `net` are cleared.
pub fn finite_diff_check<O: Objective>(net: &mut MlpNetwork, input: &Tensor, loss: &O, eps: f64) -> Result<f64> {
    if !(1e-8..=1e-4).contains(&eps) {
        return Err(Error::Config(format!("finite-difference step {eps} outside [1e-8, 1e-4]")));
    }
    net.zero_grad();
    let (out, cache) = net.forward(input)?;
    let grads = loss.output_grad(&out);
    net.backward(&cache, &grads)?;
    let analytic: Vec<Vec<f64>> = net.params().iter().map(|p| p.grad.data().to_vec()).collect();
    net.zero_grad();

    let step = DoubleDouble::new(eps);
    let mut worst = 0.0f64;
    for (pi, grads) in analytic.iter().enumerate() {
        for (j, &a) in grads.iter().enumerate() {
            let lp = loss.value(&reference_forward(net, input, Some((pi, j, step))));
            let lm = loss.value(&reference_forward(net, input, Some((pi, j, -step))));
            let cd = ((lp - lm) / DoubleDouble::new(2.0 * eps)).to_f64();
            worst = worst.max(relative_error(a, cd));
        }
    }
    Ok(worst)
}

/// `Σ c ⊙ y + ½ Σ q ⊙ y²` over every head; a generic test objective.
#[derive(Clone, Debug)]
pub struct Quadratic {
    pub linear: Vec<Vec<f64>>,
    pub quadratic: Vec<Vec<f64>>,
}

impl Objective for Quadratic {
    fn value<R: Real>(&self, outputs: &[Rows<R>]) -> R {
        let mut acc = R::zero();
        for ((head, c), q) in outputs.iter().zip(&self.linear).zip(&self.quadratic) {
            for (k, y) in head.iter().flatten().enumerate() {
                acc = acc + R::from_f64(c[k]) * *y + R::from_f64(0.5 * q[k]) * *y * *y;
            }
        }
        acc
    }

    fn output_grad(&self, outputs: &[Tensor]) -> Vec<Tensor> {
        outputs
            .iter()
            .zip(&self.linear)
            .zip(&self.quadratic)
            .map(|((o, c), q)| {
                let g = o.data().iter().enumerate().map(|(k, y)| c[k] + q[k] * y).collect();
                Tensor::matrix(o.rows(), o.cols(), g)
            })
            .collect()
    }
}
