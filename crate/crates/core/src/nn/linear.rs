use super::tensor::{gemm, Parameter, Tensor};
use crate::rng::{uniform, Rng};

/// Affine map `y = x Wᵀ + b` with `W` stored `[out, in]`.
#[derive(Clone, Debug)]
pub struct Linear {
    pub weight: Parameter,
    pub bias: Parameter,
}

impl Linear {
    /// Fan-in uniform init `U(-1/√in, 1/√in)`, scaled by `scale`.
    pub fn new(name: &str, input: usize, output: usize, scale: f64, rng: &mut Rng) -> Self {
        let bound = 1.0 / (input.max(1) as f64).sqrt();
        let w = (0..input * output).map(|_| scale * uniform(rng, -bound, bound)).collect();
        let b = (0..output).map(|_| scale * uniform(rng, -bound, bound)).collect();
        Linear {
            weight: Parameter::new(format!("{name}.weight"), Tensor::matrix(output, input, w)),
            bias: Parameter::new(format!("{name}.bias"), Tensor::matrix(1, output, b)),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.weight.value.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.weight.value.rows()
    }

    pub fn forward(&self, x: &Tensor) -> Tensor {
        let (batch, input, output) = (x.rows(), self.input_dim(), self.output_dim());
        let mut y = Tensor::zeros(&[batch, output]);
        let bias = self.bias.value.data();
        for r in 0..batch {
            y.row_mut(r).copy_from_slice(bias);
        }
        gemm(batch, input, output, x.data(), false, self.weight.value.data(), true, 1.0, y.data_mut());
        y
    }

    /// Returns `(dx, dW, db)` for upstream gradient `dy`.
    pub fn backward(&self, x: &Tensor, dy: &Tensor, want_params: bool) -> (Tensor, Option<(Tensor, Tensor)>) {
        let (batch, input, output) = (x.rows(), self.input_dim(), self.output_dim());
        let mut dx = Tensor::zeros(&[batch, input]);
        gemm(batch, output, input, dy.data(), false, self.weight.value.data(), false, 0.0, dx.data_mut());
        if !want_params {
            return (dx, None);
        }
        let mut dw = Tensor::zeros(&[output, input]);
        gemm(output, batch, input, dy.data(), true, x.data(), false, 0.0, dw.data_mut());
        let mut db = Tensor::zeros(&[1, output]);
        for r in 0..batch {
            for (acc, g) in db.data_mut().iter_mut().zip(dy.row(r)) {
                *acc += g;
            }
        }
        (dx, Some((dw, db)))
    }
}
