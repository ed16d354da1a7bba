use crate::actor::NoiseSchedule;
use crate::env::{EnvSpec, RewardKind};
use crate::{Error, Result};

/// Agent wiring selected by name.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Ablation {
    /// Clipped double distributional critic with the diffusion actor.
    Full,
    /// A single distributional critic.
    NoCdq,
    /// Two scalar critics with clipped targets.
    ScalarCdq,
    /// A single scalar critic.
    ScalarSingle,
    /// Tanh-Gaussian actor on the full critic.
    GaussianActor,
    /// Diffusion actor trained by return-weighted denoising.
    PgActor,
}

impl Ablation {
    pub const ALL: [Ablation; 6] =
        [Ablation::Full, Ablation::NoCdq, Ablation::ScalarCdq, Ablation::ScalarSingle, Ablation::GaussianActor, Ablation::PgActor];

    pub fn name(self) -> &'static str {
        match self {
            Ablation::Full => "full",
            Ablation::NoCdq => "no_cdq",
            Ablation::ScalarCdq => "scalar_cdq",
            Ablation::ScalarSingle => "scalar_single",
            Ablation::GaussianActor => "gaussian_actor",
            Ablation::PgActor => "pg_actor",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Ablation::ALL.into_iter().find(|a| a.name() == s).ok_or_else(|| {
            let names: Vec<_> = Ablation::ALL.iter().map(|a| a.name()).collect();
            Error::Config(format!("unknown ablation `{s}`; expected one of {}", names.join(", ")))
        })
    }

    pub fn distributional(self) -> bool {
        !matches!(self, Ablation::ScalarCdq | Ablation::ScalarSingle)
    }

    pub fn double(self) -> bool {
        !matches!(self, Ablation::NoCdq | Ablation::ScalarSingle)
    }
}

/// Every training hyperparameter. [`TrainConfig::for_env`] fills in the
/// dense or sparse defaults.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub seed: u64,
    pub batch_size: usize,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub alpha_lr: f64,
    pub weight_decay: f64,
    pub hidden_units: usize,
    pub hidden_layers: usize,
    pub gamma: f64,
    pub tau: f64,
    pub alpha_init: f64,
    pub lambda_ent: f64,
    /// Gradient steps between polyak updates.
    pub target_update_interval: usize,
    /// Environment steps per gradient step.
    pub env_steps_per_update: usize,
    pub initial_random_trajectories: usize,
    pub workers: usize,
    pub buffer_size: usize,
    pub v_min: f64,
    pub v_max: f64,
    pub atoms: usize,
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub sigma_data: f64,
    pub rho: f64,
    pub steps: usize,
    pub train_steps: usize,
    pub her: bool,
    pub her_k: usize,
    pub ablation: Ablation,
    pub learned_step_noise: bool,
    /// Weight policy rows by `γ^{2k}/γ^K` instead of 1.
    pub discounted_weighting: bool,
    /// Exploration draws a sampled final step instead of the mean.
    pub stochastic_exploration: bool,
    /// Return-weight temperature of the `pg_actor` comparator.
    pub pg_temperature: f64,
}

impl TrainConfig {
    /// Table defaults for the environment's reward kind, with the critic
    /// support sized to its return range.
    pub fn for_env(spec: &EnvSpec) -> Self {
        let sparse = spec.reward_kind == RewardKind::Sparse;
        let (v_min, v_max, atoms) = default_support(spec);
        TrainConfig {
            seed: 0,
            batch_size: 256,
            actor_lr: 1e-3,
            critic_lr: 1e-3,
            alpha_lr: 1e-4,
            weight_decay: 1e-4,
            hidden_units: 256,
            hidden_layers: 2,
            gamma: 0.99,
            tau: 0.995,
            alpha_init: 0.2,
            lambda_ent: 0.0,
            target_update_interval: if sparse { 10 } else { 1 },
            env_steps_per_update: if sparse { 2 } else { 1 },
            initial_random_trajectories: 200,
            workers: if sparse { 20 } else { 4 },
            buffer_size: if sparse { 2_500_000 } else { 1_000_000 },
            v_min,
            v_max,
            atoms,
            sigma_min: 0.05,
            sigma_max: 2.0,
            sigma_data: 1.0,
            rho: 7.0,
            steps: 2,
            train_steps: 5,
            her: spec.goal_dim.is_some(),
            her_k: 4,
            ablation: Ablation::Full,
            learned_step_noise: false,
            discounted_weighting: false,
            stochastic_exploration: false,
            pg_temperature: 1.0,
        }
    }

    pub fn schedule(&self) -> NoiseSchedule {
        NoiseSchedule { sigma_min: self.sigma_min, sigma_max: self.sigma_max, rho: self.rho, steps: self.steps, train_steps: self.train_steps }
    }

    pub fn validate(&self) -> Result<()> {
        let positive_f = [
            ("actor_lr", self.actor_lr),
            ("critic_lr", self.critic_lr),
            ("alpha_lr", self.alpha_lr),
            ("alpha_init", self.alpha_init),
            ("sigma_data", self.sigma_data),
            ("pg_temperature", self.pg_temperature),
        ];
        for (k, v) in positive_f {
            // learning rates may be zero for frozen runs
            let ok = if k.ends_with("_lr") { v >= 0.0 && v.is_finite() } else { v > 0.0 && v.is_finite() };
            if !ok {
                return Err(Error::Config(format!("{k} must be {}, got {v}", if k.ends_with("_lr") { "non-negative" } else { "positive" })));
            }
        }
        let positive_u = [
            ("batch_size", self.batch_size),
            ("hidden_units", self.hidden_units),
            ("target_update_interval", self.target_update_interval),
            ("env_steps_per_update", self.env_steps_per_update),
            ("workers", self.workers),
            ("buffer_size", self.buffer_size),
        ];
        for (k, v) in positive_u {
            if v == 0 {
                return Err(Error::Config(format!("{k} must be positive")));
            }
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::Config(format!("gamma must lie in (0, 1), got {}", self.gamma)));
        }
        if !(0.0..=1.0).contains(&self.tau) {
            return Err(Error::Config(format!("tau must lie in [0, 1], got {}", self.tau)));
        }
        if !(self.weight_decay >= 0.0) || !self.lambda_ent.is_finite() {
            return Err(Error::Config("weight_decay must be non-negative and lambda_ent finite".into()));
        }
        if !(self.v_min < self.v_max) || self.atoms < 2 {
            return Err(Error::Config(format!("invalid critic support [{}, {}] with {} atoms", self.v_min, self.v_max, self.atoms)));
        }
        self.schedule().validate()
    }
}

/// Support bounds and atom count matched to each task's return range.
pub fn default_support(spec: &EnvSpec) -> (f64, f64, usize) {
    match spec.name {
        "point_mass_goal" => (-50.0, 0.0, 101),
        "point_mass_dense" => (-100.0, 0.0, 101),
        "predator_prey" => (-200.0, 200.0, 201),
        _ => (-1000.0, 1000.0, 201),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::make_env;

    #[test]
    fn defaults_follow_reward_kind() {
        let dense = TrainConfig::for_env(make_env("point_mass_dense").unwrap().spec());
        assert_eq!((dense.workers, dense.env_steps_per_update, dense.target_update_interval), (4, 1, 1));
        assert!(!dense.her);
        let sparse = TrainConfig::for_env(make_env("point_mass_goal").unwrap().spec());
        assert_eq!((sparse.workers, sparse.env_steps_per_update, sparse.target_update_interval), (20, 2, 10));
        assert!(sparse.her);
        assert_eq!((sparse.v_min, sparse.v_max, sparse.atoms), (-50.0, 0.0, 101));
        for c in [dense, sparse] {
            c.validate().unwrap();
            assert_eq!((c.gamma, c.batch_size, c.alpha_init, c.tau), (0.99, 256, 0.2, 0.995));
        }
    }

    #[test]
    fn ablation_names_round_trip() {
        for a in Ablation::ALL {
            assert_eq!(Ablation::parse(a.name()).unwrap(), a);
        }
        assert!(Ablation::parse("nope").is_err());
        assert!(!Ablation::ScalarSingle.double() && !Ablation::ScalarSingle.distributional());
        assert!(Ablation::Full.double() && Ablation::Full.distributional());
    }

    #[test]
    fn out_of_range_values_are_rejected() {
        let base = TrainConfig::for_env(make_env("pendulum").unwrap().spec());
        for bad in [
            TrainConfig { gamma: 1.5, ..base.clone() },
            TrainConfig { tau: -0.1, ..base.clone() },
            TrainConfig { batch_size: 0, ..base.clone() },
            TrainConfig { v_min: 1.0, v_max: 0.0, ..base.clone() },
            TrainConfig { sigma_min: 3.0, ..base.clone() },
            TrainConfig { actor_lr: -1.0, ..base.clone() },
        ] {
            assert!(matches!(bad.validate(), Err(Error::Config(_))), "{bad:?}");
        }
    }
}
