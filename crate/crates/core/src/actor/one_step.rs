//! Monte-Carlo check that one denoising step with spread `σ̂` never beats the
//! clean policy in expected value, on a 1-D Gaussian problem with known answers.
//!
//! Policy `N(m, s²)`, critic `Q(a) = -a²`, optimal policy `p* ∝ exp(Q/α) = N(0, α/2)`.
//! The denoiser at each level is a least-squares linear fit on noised policy
//! samples; for Gaussian data this converges to the posterior mean.

use super::schedule::NoiseSchedule;
use crate::rng::{derived, normal, Rng};

#[derive(Clone, Debug)]
pub struct OneStepOracle {
    pub policy_mean: f64,
    pub policy_std: f64,
    pub alpha: f64,
    pub schedule: NoiseSchedule,
    /// Number of noise steps; the ladder has `levels + 1` entries `σ(i/levels)`.
    pub levels: usize,
    pub sigma_hats: Vec<f64>,
    pub samples: usize,
    pub seed: u64,
}

impl Default for OneStepOracle {
    fn default() -> Self {
        OneStepOracle {
            policy_mean: 0.3,
            policy_std: 0.1,
            alpha: 0.01,
            schedule: NoiseSchedule::default(),
            levels: 2,
            sigma_hats: vec![0.05, 0.1, 0.2],
            samples: 100_000,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct StepCheck {
    pub k: usize,
    pub mean_q: f64,
    pub std_err: f64,
    pub holds: bool,
}

#[derive(Clone, Debug)]
pub struct BoundCase {
    pub sigma_hat: f64,
    pub kl_one_step: f64,
    pub kl_clean: f64,
    /// One-step distribution at least as far from `p*` as the clean one.
    pub far_enough: bool,
    /// Entropy of the one-step distributions increases with `k`.
    pub entropy_increasing: bool,
    pub steps: Vec<StepCheck>,
}

#[derive(Clone, Debug)]
pub struct BoundReport {
    pub clean_mean_q: f64,
    pub clean_std_err: f64,
    pub noised_entropy_increasing: bool,
    pub kl_nondecreasing: bool,
    pub cases: Vec<BoundCase>,
}

impl BoundReport {
    /// True when some `σ̂` is far enough from `p*` and every such `σ̂` satisfies the bound.
    pub fn passed(&self) -> bool {
        let eligible: Vec<_> = self.cases.iter().filter(|c| c.far_enough).collect();
        !eligible.is_empty() && eligible.iter().all(|c| c.steps.iter().all(|s| s.holds))
    }
}

fn gaussian_entropy(var: f64) -> f64 {
    0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E * var).ln()
}

fn kl_gaussian(mean: f64, var: f64, ref_mean: f64, ref_var: f64) -> f64 {
    0.5 * (var / ref_var + (mean - ref_mean).powi(2) / ref_var - 1.0 + (ref_var / var).ln())
}

fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Fits `D(u) = b0 + b1·u` on `(a0 + σε, a0)` pairs.
fn fit_denoiser(oracle: &OneStepOracle, sigma: f64, rng: &mut Rng) -> (f64, f64) {
    let n = oracle.samples as f64;
    let (mut su, mut sa, mut suu, mut sua) = (0.0, 0.0, 0.0, 0.0);
    for _ in 0..oracle.samples {
        let a = oracle.policy_mean + oracle.policy_std * normal(rng);
        let u = a + sigma * normal(rng);
        su += u;
        sa += a;
        suu += u * u;
        sua += u * a;
    }
    let b1 = (sua - su * sa / n) / (suu - su * su / n);
    (sa / n - b1 * su / n, b1)
}

pub fn one_step_bound(oracle: &OneStepOracle) -> BoundReport {
    let ladder = oracle.schedule.regression_ladder(oracle.levels);
    let (m, s2) = (oracle.policy_mean, oracle.policy_std.powi(2));
    let star_var = oracle.alpha / 2.0;
    let q = |a: f64| -a * a;

    let mut rng = derived(oracle.seed, 0);
    let clean: Vec<f64> = (0..oracle.samples).map(|_| q(m + (s2 + ladder[0] * ladder[0]).sqrt() * normal(&mut rng))).collect();
    let (clean_mean_q, clean_std_err) = mean_and_se(&clean);

    let noised_var: Vec<f64> = ladder.iter().map(|s| s2 + s * s).collect();
    let noised_entropy_increasing = noised_var.windows(2).all(|w| gaussian_entropy(w[1]) > gaussian_entropy(w[0]));
    let kl_noised: Vec<f64> = noised_var.iter().map(|v| kl_gaussian(m, *v, 0.0, star_var)).collect();

    let fits: Vec<(f64, f64)> = (1..ladder.len()).map(|i| fit_denoiser(oracle, ladder[i], &mut derived(oracle.seed, i as u64))).collect();

    let mut kl_nondecreasing = kl_noised.windows(2).all(|w| w[1] >= w[0]);
    let mut cases = Vec::new();
    for (ci, &sh) in oracle.sigma_hats.iter().enumerate() {
        let mut rng = derived(oracle.seed, 1000 + ci as u64);
        let mut steps = Vec::new();
        let mut hat_moments = Vec::new();
        for k in 0..oracle.levels {
            let (b0, b1) = fits[k];
            let sd_in = noised_var[k + 1].sqrt();
            let draws: Vec<f64> = (0..oracle.samples)
                .map(|_| {
                    let u = m + sd_in * normal(&mut rng);
                    q(b0 + b1 * u + sh * normal(&mut rng))
                })
                .collect();
            let (mean_q, std_err) = mean_and_se(&draws);
            let slack = 3.0 * (std_err * std_err + clean_std_err * clean_std_err).sqrt();
            steps.push(StepCheck { k, mean_q, std_err, holds: mean_q <= clean_mean_q + slack });
            hat_moments.push((b0 + b1 * m, b1 * b1 * noised_var[k + 1] + sh * sh));
        }
        let kl_hat: Vec<f64> = hat_moments.iter().map(|(mu, v)| kl_gaussian(*mu, *v, 0.0, star_var)).collect();
        kl_nondecreasing &= kl_hat.windows(2).all(|w| w[1] >= w[0]);
        let entropy_increasing = hat_moments.windows(2).all(|w| gaussian_entropy(w[1].1) > gaussian_entropy(w[0].1));
        cases.push(BoundCase {
            sigma_hat: sh,
            kl_one_step: kl_hat[0],
            kl_clean: kl_noised[0],
            far_enough: kl_hat[0] >= kl_noised[0],
            entropy_increasing,
            steps,
        });
    }
    BoundReport { clean_mean_q, clean_std_err, noised_entropy_increasing, kl_nondecreasing, cases }
}
