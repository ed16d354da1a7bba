//! Straight-line forward pass over plain nested loops, generic in the scalar
//! type. Shares no code with the batched `MlpNetwork::forward`.

use super::mlp::MlpNetwork;
use super::precise::Real;
use super::tensor::Tensor;
use super::LN_EPS;

/// Row-major rows of one head's outputs.
pub type Rows<R> = Vec<Vec<R>>;

/// Evaluates `net` on `input`, optionally adding `delta` to entry
/// `(param, index)` of the parameter list (in `MlpNetwork::params` order).
pub fn reference_forward<R: Real>(net: &MlpNetwork, input: &Tensor, perturb: Option<(usize, usize, R)>) -> Vec<Rows<R>> {
    let params: Vec<Vec<R>> = net
        .params()
        .iter()
        .enumerate()
        .map(|(pi, p)| {
            p.value
                .data()
                .iter()
                .enumerate()
                .map(|(j, &v)| match perturb {
                    Some((tp, tj, d)) if tp == pi && tj == j => R::from_f64(v) + d,
                    _ => R::from_f64(v),
                })
                .collect()
        })
        .collect();
    let cfg = net.config();
    (0..input.rows())
        .map(|r| {
            let mut h: Vec<R> = input.row(r).iter().map(|&v| R::from_f64(v)).collect();
            let mut k = 0;
            for _ in 0..cfg.hidden_layers {
                let (w, b) = (&params[k], &params[k + 1]);
                k += 2;
                let n_in = h.len();
                let mut z: Vec<R> = (0..cfg.hidden_units)
                    .map(|o| {
                        let mut acc = b[o];
                        for i in 0..n_in {
                            acc = acc + w[o * n_in + i] * h[i];
                        }
                        acc
                    })
                    .collect();
                if cfg.layer_norm {
                    let (g, bb) = (&params[k], &params[k + 1]);
                    k += 2;
                    let n = R::from_f64(z.len() as f64);
                    let mean = z.iter().fold(R::zero(), |a, &v| a + v) / n;
                    let var = z.iter().fold(R::zero(), |a, &v| a + (v - mean) * (v - mean)) / n;
                    let denom = (var + R::from_f64(LN_EPS)).sqrt();
                    for (j, v) in z.iter_mut().enumerate() {
                        *v = g[j] * (*v - mean) / denom + bb[j];
                    }
                }
                h = z.into_iter().map(|v| v.max(R::zero())).collect();
            }
            cfg.head_dims
                .iter()
                .map(|&d| {
                    let (w, b) = (&params[k], &params[k + 1]);
                    k += 2;
                    let n_in = h.len();
                    (0..d)
                        .map(|o| {
                            let mut acc = b[o];
                            for i in 0..n_in {
                                acc = acc + w[o * n_in + i] * h[i];
                            }
                            acc
                        })
                        .collect::<Vec<R>>()
                })
                .collect::<Vec<_>>()
        })
        .fold(vec![Vec::new(); cfg.head_dims.len()], |mut heads: Vec<Rows<R>>, per_row| {
            for (h, row) in heads.iter_mut().zip(per_row) {
                h.push(row);
            }
            heads
        })
}
