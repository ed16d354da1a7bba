use super::support::ReturnDistribution;
use crate::nn::{Objective, Real, Rows, Tensor};

pub fn log_softmax<R: Real>(logits: &[R]) -> Vec<R> {
    let max = logits.iter().copied().fold(logits[0], R::max);
    let sum = logits.iter().fold(R::zero(), |acc, &l| acc + (l - max).exp());
    let log_z = max + sum.ln();
    logits.iter().map(|&l| l - log_z).collect()
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut p: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let inv = 1.0 / p.iter().sum::<f64>();
    p.iter_mut().for_each(|v| *v *= inv);
    p
}

/// Joint cross-entropy of two critics against one label, with the gradient
/// `softmax(l) - label` for each logit vector.
pub fn critic_loss_and_grad(logits1: &[f64], logits2: &[f64], label: &ReturnDistribution) -> (f64, Vec<f64>, Vec<f64>) {
    let mut loss = 0.0;
    let mut grads = Vec::with_capacity(2);
    for logits in [logits1, logits2] {
        let lp = log_softmax(logits);
        loss -= lp.iter().zip(&label.probs).map(|(l, y)| if *y == 0.0 { 0.0 } else { y * l }).sum::<f64>();
        grads.push(lp.iter().zip(&label.probs).map(|(l, y)| l.exp() - y).collect::<Vec<_>>());
    }
    let g2 = grads.pop().unwrap();
    let g1 = grads.pop().unwrap();
    (loss, g1, g2)
}

/// Batch-mean cross-entropy of one critic head against per-row labels.
#[derive(Clone, Debug)]
pub struct CriticObjective {
    pub labels: Vec<Vec<f64>>,
}

impl Objective for CriticObjective {
    fn value<R: Real>(&self, outputs: &[Rows<R>]) -> R {
        let n = R::from_f64(self.labels.len() as f64);
        let mut total = R::zero();
        for (row, label) in outputs[0].iter().zip(&self.labels) {
            for (l, y) in log_softmax(row).into_iter().zip(label) {
                total = total - R::from_f64(*y) * l;
            }
        }
        total / n
    }

    fn output_grad(&self, outputs: &[Tensor]) -> Vec<Tensor> {
        let logits = &outputs[0];
        let scale = 1.0 / self.labels.len() as f64;
        let mut g = Vec::with_capacity(logits.len());
        for (r, label) in self.labels.iter().enumerate() {
            for (p, y) in softmax(logits.row(r)).into_iter().zip(label) {
                g.push((p - y) * scale);
            }
        }
        vec![Tensor::matrix(logits.rows(), logits.cols(), g)]
    }
}
