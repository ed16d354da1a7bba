use super::support::{ReturnDistribution, Support};

/// Adds `weight·h(z)` into `out`, where `h` is the clamped two-hot map.
pub(crate) fn two_hot_accumulate(support: &Support, z: f64, weight: f64, out: &mut [f64]) {
    let n = support.len();
    let z = support.clamp(z);
    let b = (z - support.v_min()) / support.spacing();
    let lower = (b.floor() as usize).min(n - 1);
    if lower == n - 1 {
        out[n - 1] += weight;
        return;
    }
    let upper_w = (b - lower as f64).clamp(0.0, 1.0);
    out[lower] += weight * (1.0 - upper_w);
    out[lower + 1] += weight * upper_w;
}

/// Two-hot encoding of `z`; values outside the support land on the nearest end atom.
pub fn two_hot(support: &Support, z: f64) -> ReturnDistribution {
    let mut probs = vec![0.0; support.len()];
    two_hot_accumulate(support, z, 1.0, &mut probs);
    ReturnDistribution { probs }
}

/// Per-atom projection: `out[k] = Σ_j h(z_p[j])[k] · p[j]`.
pub fn project_dist(shifted: &[f64], p: &ReturnDistribution, support: &Support) -> ReturnDistribution {
    assert_eq!(shifted.len(), p.len(), "shifted atoms and probabilities differ in length");
    let mut probs = vec![0.0; support.len()];
    for (&z, &w) in shifted.iter().zip(&p.probs) {
        if w != 0.0 {
            two_hot_accumulate(support, z, w, &mut probs);
        }
    }
    ReturnDistribution { probs }
}

/// Mean-first projection: `two_hot(Σ_j z_p[j] · p[j])`.
pub fn project_twohot(shifted: &[f64], p: &ReturnDistribution, support: &Support) -> ReturnDistribution {
    assert_eq!(shifted.len(), p.len(), "shifted atoms and probabilities differ in length");
    let mean: f64 = shifted.iter().zip(&p.probs).map(|(z, w)| z * w).sum();
    two_hot(support, mean)
}

pub fn expected_value(dist: &ReturnDistribution, support: &Support) -> f64 {
    dist.probs.iter().zip(support.atoms()).map(|(p, z)| p * z).sum()
}

/// The distribution with the lower mean; ties go to `d1`.
pub fn clip_select<'a>(d1: &'a ReturnDistribution, d2: &'a ReturnDistribution, support: &Support) -> &'a ReturnDistribution {
    if expected_value(d1, support) <= expected_value(d2, support) {
        d1
    } else {
        d2
    }
}

/// Bootstrapped label `Φ_dist(r + γ(1 - done)·atoms, next)`.
pub fn critic_target(reward: f64, gamma: f64, done: bool, next: &ReturnDistribution, support: &Support) -> ReturnDistribution {
    if done {
        return two_hot(support, reward);
    }
    let shifted: Vec<f64> = support.atoms().iter().map(|z| reward + gamma * z).collect();
    project_dist(&shifted, next, support)
}
