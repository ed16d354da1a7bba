use super::denoiser::Denoise;
use super::schedule::NoiseSchedule;
use crate::nn::Tensor;
use crate::rng::{normal, Rng};
use crate::Result;

/// Largest action magnitude handed out; keeps `atanh` finite downstream.
pub const ACTION_BOUND: f64 = 1.0 - 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SampleMode {
    /// Emit the denoiser mean on the last step instead of a noisy draw.
    pub final_mean: bool,
    /// Use the learned σ head as per-step noise instead of the kernel variance.
    pub learned_noise: bool,
}

impl SampleMode {
    pub const MEAN: SampleMode = SampleMode { final_mean: true, learned_noise: false };
    pub const STOCHASTIC: SampleMode = SampleMode { final_mean: false, learned_noise: false };
}

#[derive(Clone, Debug)]
pub struct Sample {
    /// Squashed actions in `(-1, 1)`.
    pub actions: Tensor,
    /// Final pre-squash values.
    pub pre_tanh: Tensor,
}

pub fn squash(u: f64) -> f64 {
    u.tanh().clamp(-ACTION_BOUND, ACTION_BOUND)
}

/// Runs the reverse chain `σ_K → … → σ_0` for every state row.
///
/// Each step draws from `N(u + (σ_k² - σ_{k-1}²)/σ_k² · (D - u), (σ_k² - σ_{k-1}²)·I)`
/// where `D` is the denoiser mean at level `σ_k`.
pub fn sample_actions<D: Denoise + ?Sized>(denoiser: &D, states: &Tensor, schedule: &NoiseSchedule, mode: SampleMode, rng: &mut Rng) -> Result<Sample> {
    let rows = states.rows();
    let dim = denoiser.action_dim();
    let ladder = schedule.sampling_ladder();
    let k_top = ladder.len() - 1;
    let mut u = Tensor::matrix(rows, dim, (0..rows * dim).map(|_| ladder[k_top] * normal(rng)).collect());
    for k in (1..=k_top).rev() {
        let (hi, lo) = (ladder[k], ladder[k - 1]);
        let (mean_pred, spread) = denoiser.denoise(states, &u, &vec![hi; rows])?;
        let last = k == 1;
        let var = hi * hi - lo * lo;
        let blend = var / (hi * hi);
        for (i, x) in u.data_mut().iter_mut().enumerate() {
            let d = mean_pred.data()[i];
            if last && mode.final_mean {
                *x = d;
                continue;
            }
            let mean = *x + blend * (d - *x);
            let sd = if mode.learned_noise { spread.data()[i] } else { var.sqrt() };
            *x = mean + sd * normal(rng);
        }
    }
    let actions = Tensor::matrix(rows, dim, u.data().iter().map(|v| squash(*v)).collect());
    Ok(Sample { actions, pre_tanh: u })
}
