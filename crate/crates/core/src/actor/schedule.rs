use crate::{Error, Result};

/// Noise levels `σ(η) = (σ_min^{1/ρ} + η(σ_max^{1/ρ} - σ_min^{1/ρ}))^ρ`.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseSchedule {
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub rho: f64,
    /// Denoising steps when acting.
    pub steps: usize,
    /// Noise levels drawn from when training on replay actions.
    pub train_steps: usize,
}

impl Default for NoiseSchedule {
    fn default() -> Self {
        NoiseSchedule { sigma_min: 0.05, sigma_max: 2.0, rho: 7.0, steps: 2, train_steps: 5 }
    }
}

impl NoiseSchedule {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_min > 0.0 && self.sigma_min < self.sigma_max && self.sigma_max.is_finite()) {
            return Err(Error::Config(format!("need 0 < sigma_min < sigma_max, got {} and {}", self.sigma_min, self.sigma_max)));
        }
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return Err(Error::Config(format!("rho must be positive, got {}", self.rho)));
        }
        if self.steps == 0 || self.train_steps == 0 {
            return Err(Error::Config("step counts must be at least 1".into()));
        }
        Ok(())
    }

    pub fn sigma_at(&self, eta: f64) -> f64 {
        if eta <= 0.0 {
            return self.sigma_min;
        }
        if eta >= 1.0 {
            return self.sigma_max;
        }
        let inv = 1.0 / self.rho;
        let lo = self.sigma_min.powf(inv);
        let hi = self.sigma_max.powf(inv);
        (lo + eta * (hi - lo)).powf(self.rho)
    }

    /// Level `i` of an `n`-level training ladder, `σ((i-1)/(n-1))`; a single level maps to `σ_min`.
    pub fn train_level(&self, i: usize, n: usize) -> f64 {
        debug_assert!(i >= 1 && i <= n);
        if n == 1 {
            self.sigma_min
        } else {
            self.sigma_at((i - 1) as f64 / (n - 1) as f64)
        }
    }

    /// Sampling ladder `[σ_0, σ_1, …, σ_K]` for `K = steps`.
    ///
    /// `σ_0 = 0` so the final kernel mean equals the denoiser output. For
    /// `K = 1` the single level is `σ_max`, otherwise `σ_k = σ((k-1)/(K-1))`.
    pub fn sampling_ladder(&self) -> Vec<f64> {
        let k = self.steps;
        let mut out = vec![0.0];
        if k == 1 {
            out.push(self.sigma_max);
        } else {
            out.extend((1..=k).map(|i| self.train_level(i, k)));
        }
        out
    }

    /// `K + 1` levels `σ(i/K)`, `i = 0…K`, used by the weighted denoising loss.
    pub fn regression_ladder(&self, k: usize) -> Vec<f64> {
        (0..=k).map(|i| self.sigma_at(i as f64 / k as f64)).collect()
    }
}

/// `(1/σ_prev² - 1/σ_k²) · K/2`.
pub fn pg_weight_between(sigma_prev: f64, sigma_k: f64, total: usize) -> f64 {
    (1.0 / (sigma_prev * sigma_prev) - 1.0 / (sigma_k * sigma_k)) * total as f64 / 2.0
}

/// Weight of level `k` (1-based) on the `K + 1` level regression ladder.
pub fn pg_weight(schedule: &NoiseSchedule, k: usize, total: usize) -> f64 {
    assert!(k >= 1 && k <= total, "level {k} outside 1..={total}");
    let ladder = schedule.regression_ladder(total);
    pg_weight_between(ladder[k - 1], ladder[k], total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoints_are_exact() {
        let s = NoiseSchedule::default();
        assert_eq!(s.sigma_at(0.0), 0.05);
        assert_eq!(s.sigma_at(1.0), 2.0);
    }

    #[test]
    fn midpoint_matches_high_precision_value() {
        // 40-digit evaluation of the closed form
        let s = NoiseSchedule::default();
        assert!((s.sigma_at(0.5) - 0.402_099_239_590_896_076).abs() < 1e-14);
        assert!((s.sigma_at(0.25) - 0.153_190_270_842_459_150).abs() < 1e-14);
        assert!((s.sigma_at(0.75) - 0.938_849_586_146_826_252).abs() < 1e-14);
        assert!((s.sigma_at(0.5) - 0.402).abs() < 1e-3);
    }

    #[test]
    fn strictly_increasing() {
        let s = NoiseSchedule::default();
        let v: Vec<f64> = (0..=1000).map(|i| s.sigma_at(i as f64 / 1000.0)).collect();
        assert!(v.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn ladders() {
        let s = NoiseSchedule::default();
        assert_eq!(s.sampling_ladder(), vec![0.0, 0.05, 2.0]);
        let one = NoiseSchedule { steps: 1, ..s.clone() };
        assert_eq!(one.sampling_ladder(), vec![0.0, 2.0]);
        assert_eq!(s.train_level(1, 1), 0.05);
        assert_eq!(s.train_level(5, 5), 2.0);
        assert_eq!(s.train_level(3, 5), s.sigma_at(0.5));
    }

    #[test]
    fn regression_weights() {
        assert!((pg_weight_between(0.05, 2.0, 2) - 399.75).abs() < 1e-12);
        assert_eq!(pg_weight_between(0.3, 0.3, 4), 0.0);
        let s = NoiseSchedule::default();
        for total in 1..8 {
            for k in 1..=total {
                assert!(pg_weight(&s, k, total) > 0.0);
            }
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        let bad = NoiseSchedule { sigma_min: 2.0, sigma_max: 1.0, ..Default::default() };
        assert!(bad.validate().is_err());
        assert!(NoiseSchedule { steps: 0, ..Default::default() }.validate().is_err());
    }
}
