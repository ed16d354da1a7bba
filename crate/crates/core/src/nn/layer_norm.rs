use super::tensor::{Parameter, Tensor};

pub const LN_EPS: f64 = 1e-5;

/// Per-row layer normalization with learned gain and bias.
#[derive(Clone, Debug)]
pub struct LayerNorm {
    pub gain: Parameter,
    pub bias: Parameter,
}

impl LayerNorm {
    pub fn new(name: &str, dim: usize) -> Self {
        LayerNorm {
            gain: Parameter::new(format!("{name}.gain"), Tensor::matrix(1, dim, vec![1.0; dim])),
            bias: Parameter::new(format!("{name}.bias"), Tensor::zeros(&[1, dim])),
        }
    }
}

#[derive(Clone, Debug)]
pub struct LayerNormCache {
    pub xhat: Tensor,
    pub inv_std: Vec<f64>,
}

/// Normalizes every row of `x` to zero mean and unit variance, then applies
/// `gain * x̂ + bias`.
pub fn layer_norm(x: &Tensor, gain: &[f64], bias: &[f64]) -> (Tensor, LayerNormCache) {
    let (rows, dim) = (x.rows(), x.cols());
    assert_eq!(gain.len(), dim);
    assert_eq!(bias.len(), dim);
    let mut xhat = Tensor::zeros(&[rows, dim]);
    let mut y = Tensor::zeros(&[rows, dim]);
    let mut inv_std = Vec::with_capacity(rows);
    let n = dim as f64;
    for r in 0..rows {
        let row = x.row(r);
        let mean = row.iter().sum::<f64>() / n;
        let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let is = 1.0 / (var + LN_EPS).sqrt();
        inv_std.push(is);
        let xh = xhat.row_mut(r);
        for (o, v) in xh.iter_mut().zip(row) {
            *o = (v - mean) * is;
        }
        let xh = xhat.row(r).to_vec();
        for ((o, h), (g, b)) in y.row_mut(r).iter_mut().zip(&xh).zip(gain.iter().zip(bias)) {
            *o = g * h + b;
        }
    }
    (y, LayerNormCache { xhat, inv_std })
}

/// Returns `(dx, dgain, dbias)`.
pub fn layer_norm_backward(
    cache: &LayerNormCache,
    gain: &[f64],
    dy: &Tensor,
) -> (Tensor, Vec<f64>, Vec<f64>) {
    let (rows, dim) = (dy.rows(), dy.cols());
    let n = dim as f64;
    let mut dx = Tensor::zeros(&[rows, dim]);
    let mut dgain = vec![0.0; dim];
    let mut dbias = vec![0.0; dim];
    let mut dxhat = vec![0.0; dim];
    for r in 0..rows {
        let g = dy.row(r);
        let xh = cache.xhat.row(r);
        let mut sum = 0.0;
        let mut sum_x = 0.0;
        for j in 0..dim {
            dgain[j] += g[j] * xh[j];
            dbias[j] += g[j];
            dxhat[j] = g[j] * gain[j];
            sum += dxhat[j];
            sum_x += dxhat[j] * xh[j];
        }
        let scale = cache.inv_std[r] / n;
        for (j, o) in dx.row_mut(r).iter_mut().enumerate() {
            *o = scale * (n * dxhat[j] - sum - xh[j] * sum_x);
        }
    }
    (dx, dgain, dbias)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::relative_error;
    use crate::rng::{normal_vec, seeded};

    #[test]
    fn constant_row_maps_to_bias() {
        let x = Tensor::row_vector(&[3.0; 4]);
        let (y, _) = layer_norm(&x, &[1.0; 4], &[0.0; 4]);
        assert!(y.data().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn already_standardized_row_is_preserved() {
        let x = Tensor::row_vector(&[1.0, -1.0]);
        let (y, _) = layer_norm(&x, &[1.0; 2], &[0.0; 2]);
        // only the epsilon floor separates these
        assert!((y.data()[0] - 1.0).abs() < 1e-5);
        assert!((y.data()[1] + 1.0).abs() < 1e-5);
    }

    #[test]
    fn backward_matches_central_differences() {
        let mut rng = seeded(3);
        let dim = 6;
        let x = Tensor::matrix(2, dim, normal_vec(&mut rng, 2 * dim));
        let gain = normal_vec(&mut rng, dim);
        let bias = normal_vec(&mut rng, dim);
        let c = normal_vec(&mut rng, 2 * dim);
        let loss = |x: &Tensor| -> f64 {
            let (y, _) = layer_norm(x, &gain, &bias);
            y.data().iter().zip(&c).map(|(a, b)| a * b).sum()
        };
        let (_, cache) = layer_norm(&x, &gain, &bias);
        let dy = Tensor::matrix(2, dim, c.clone());
        let (dx, _, _) = layer_norm_backward(&cache, &gain, &dy);
        let eps = 1e-6;
        for i in 0..x.len() {
            let mut xp = x.clone();
            xp.data_mut()[i] += eps;
            let mut xm = x.clone();
            xm.data_mut()[i] -= eps;
            let cd = (loss(&xp) - loss(&xm)) / (2.0 * eps);
            assert!(relative_error(dx.data()[i], cd) < 1e-6, "entry {i}");
        }
    }
}
