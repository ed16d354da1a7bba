use super::config::{Ablation, TrainConfig};
use super::replay::{Batch, ReplayBuffer};
use crate::actor::{
    pg_policy_update, policy_update, sample_actions, ActorOptimizers, Denoiser, GaussianActor, NoiseSchedule, PolicyBatch, PolicyStats,
    SampleMode, Temperature,
};
use crate::critic::{CriticKind, Critics, Support};
use crate::env::EnvSpec;
use crate::nn::{AdamW, Checkpoint, MlpNetwork, Tensor};
use crate::rng::Rng;
use crate::{Error, Result};
use rand::Rng as _;

#[derive(Clone, Debug)]
pub enum Actor {
    Diffusion(Denoiser),
    Gaussian(GaussianActor),
}

/// Losses and statistics from one gradient step.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StepDiagnostics {
    pub critic_loss: f64,
    pub actor_loss: f64,
    pub alpha: f64,
    pub alpha_loss: f64,
    pub log_prob: f64,
    pub mean_q: f64,
}

/// Actor, temperature and critics with their optimizers.
#[derive(Clone, Debug)]
pub struct Agent {
    actor: Actor,
    temperature: Temperature,
    critics: Critics,
    schedule: NoiseSchedule,
    config: TrainConfig,
    critic_opt: AdamW,
    actor_opts: ActorOptimizers,
    updates: u64,
}

impl Agent {
    pub fn new(config: &TrainConfig, spec: &EnvSpec, rng: &mut Rng) -> Result<Self> {
        config.validate()?;
        let state_dim = spec.obs_dim + spec.goal_dim.unwrap_or(0);
        let adim = spec.action_dim;
        let (hu, hl) = (config.hidden_units, config.hidden_layers);
        let actor = match config.ablation {
            Ablation::GaussianActor => Actor::Gaussian(GaussianActor::new(state_dim, adim, hu, hl, rng)?),
            _ => Actor::Diffusion(Denoiser::new(state_dim, adim, hu, hl, config.sigma_data, rng)?),
        };
        let kind = if config.ablation.distributional() { CriticKind::Distributional } else { CriticKind::Scalar };
        let support = Support::new(config.v_min, config.v_max, config.atoms)?;
        let critics = Critics::new(kind, config.ablation.double(), support, state_dim, adim, hu, hl, rng)?;
        Ok(Agent {
            actor,
            temperature: Temperature::new(config.alpha_init, config.lambda_ent, adim)?,
            critics,
            schedule: config.schedule(),
            config: config.clone(),
            critic_opt: AdamW::new(config.critic_lr, config.weight_decay),
            actor_opts: ActorOptimizers { actor: AdamW::new(config.actor_lr, config.weight_decay), temperature: AdamW::new(config.alpha_lr, 0.0) },
            updates: 0,
        })
    }

    pub fn actor(&self) -> &Actor {
        &self.actor
    }

    pub fn critics(&self) -> &Critics {
        &self.critics
    }

    pub fn temperature(&self) -> &Temperature {
        &self.temperature
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    /// Gradient steps taken so far.
    pub fn updates(&self) -> u64 {
        self.updates
    }

    /// Actions for a batch of agent inputs. `explore` selects the
    /// behaviour-policy variant; otherwise the final step is the mean.
    pub fn act(&self, states: &Tensor, explore: bool, rng: &mut Rng) -> Result<Tensor> {
        let stochastic = explore && self.config.stochastic_exploration;
        match &self.actor {
            Actor::Diffusion(d) => {
                let mode = SampleMode { final_mean: !stochastic, learned_noise: self.config.learned_step_noise };
                Ok(sample_actions(d, states, &self.schedule, mode, rng)?.actions)
            }
            Actor::Gaussian(g) => Ok(g.act(states, !explore, rng)?.actions),
        }
    }

    /// Sampled actions used inside bootstrap targets.
    fn target_actions(&self, states: &Tensor, rng: &mut Rng) -> Result<Tensor> {
        match &self.actor {
            Actor::Diffusion(d) => {
                let mode = SampleMode { final_mean: false, learned_noise: self.config.learned_step_noise };
                Ok(sample_actions(d, states, &self.schedule, mode, rng)?.actions)
            }
            Actor::Gaussian(g) => Ok(g.act(states, false, rng)?.actions),
        }
    }

    pub fn train_step(&mut self, buffer: &ReplayBuffer, rng: &mut Rng) -> Result<StepDiagnostics> {
        if buffer.len() < self.config.batch_size {
            return Err(Error::Usage(format!("replay holds {} transitions, need a batch of {}", buffer.len(), self.config.batch_size)));
        }
        let batch = buffer.sample_batch(self.config.batch_size, rng)?;
        self.train_on_batch(&batch, rng)
    }

    /// Critic step, actor and temperature step, then a target update when due.
    pub fn train_on_batch(&mut self, batch: &Batch, rng: &mut Rng) -> Result<StepDiagnostics> {
        let gamma = self.config.gamma;
        let next_actions = self.target_actions(&batch.next_states, rng)?;
        let cs = self.critics.update(
            &batch.states,
            &batch.actions,
            &batch.rewards,
            &batch.next_states,
            &next_actions,
            &batch.dones,
            gamma,
            &self.critic_opt,
        )?;
        let ps = self.actor_step(batch, &next_actions, rng)?;
        self.updates += 1;
        if self.updates % self.config.target_update_interval as u64 == 0 {
            self.critics.update_targets(self.config.tau)?;
        }
        Ok(StepDiagnostics {
            critic_loss: cs.loss,
            actor_loss: ps.actor_loss,
            alpha: ps.alpha,
            alpha_loss: ps.alpha_loss,
            log_prob: ps.log_prob,
            mean_q: cs.mean_q,
        })
    }

    fn actor_step(&mut self, batch: &Batch, next_actions: &Tensor, rng: &mut Rng) -> Result<PolicyStats> {
        let critics = &self.critics;
        let critic = |s: &Tensor, a: &Tensor| critics.min_q_with_action_grad(s, a);
        match &mut self.actor {
            Actor::Gaussian(g) => g.update(&mut self.temperature, &batch.states, critic, &self.actor_opts, rng),
            Actor::Diffusion(d) if self.config.ablation == Ablation::PgActor => {
                let states = Tensor::vcat(&batch.states, &batch.next_states);
                let actions = Tensor::vcat(&batch.actions, next_actions);
                let q = critics.min_q_with_action_grad(&states, &actions)?.q;
                let levels = self.schedule.train_steps;
                let loss = pg_policy_update(d, &states, &actions, &q, self.config.pg_temperature, &self.schedule, levels, &self.actor_opts.actor, rng)?;
                Ok(PolicyStats { actor_loss: loss, alpha: self.temperature.alpha(), ..Default::default() })
            }
            Actor::Diffusion(d) => {
                let rows = batch.states.rows();
                let states = Tensor::vcat(&batch.states, &batch.next_states);
                let actions = Tensor::vcat(&batch.actions, next_actions);
                let mut sigmas = Vec::with_capacity(2 * rows);
                let mut weights = Vec::with_capacity(2 * rows);
                for half in 0..2 {
                    let levels = if half == 0 { self.schedule.train_steps } else { self.schedule.steps };
                    for _ in 0..rows {
                        let k = rng.random_range(1..=levels);
                        sigmas.push(self.schedule.train_level(k, levels));
                        weights.push(if self.config.discounted_weighting { gamma_weight(self.config.gamma, k, levels) } else { 1.0 });
                    }
                }
                let pb = PolicyBatch { states: &states, actions: &actions, sigmas: &sigmas, weights: &weights };
                policy_update(d, &mut self.temperature, pb, critic, &self.actor_opts, rng)
            }
        }
    }

    fn networks(&self) -> Vec<(String, &MlpNetwork)> {
        let mut out = vec![(
            "actor".to_string(),
            match &self.actor {
                Actor::Diffusion(d) => d.net(),
                Actor::Gaussian(g) => g.net(),
            },
        )];
        for (i, n) in self.critics.online().iter().enumerate() {
            out.push((format!("critic{i}"), n));
        }
        for (i, n) in self.critics.target().iter().enumerate() {
            out.push((format!("target{i}"), n));
        }
        out
    }

    /// Every parameter value, in a fixed order.
    pub fn parameter_values(&self) -> Vec<Vec<f64>> {
        let mut out: Vec<Vec<f64>> =
            self.networks().into_iter().flat_map(|(_, n)| n.params().into_iter().map(|p| p.value.data().to_vec()).collect::<Vec<_>>()).collect();
        out.push(self.temperature.log_alpha.value.data().to_vec());
        out
    }

    /// Parameter values and the update counter. Optimizer moments are not saved.
    pub fn to_checkpoint(&self) -> Checkpoint {
        let mut ck = Checkpoint::default();
        for (name, net) in self.networks() {
            for (j, p) in net.params().into_iter().enumerate() {
                ck.insert(format!("{name}.p{j:02}"), p.value.clone());
            }
        }
        ck.insert("log_alpha", self.temperature.log_alpha.value.clone());
        ck.meta.insert("ablation".into(), self.config.ablation.name().into());
        ck.meta.insert("updates".into(), self.updates.to_string());
        ck
    }

    pub fn load_checkpoint(&mut self, ck: &Checkpoint) -> Result<()> {
        let ablation = ck.meta("ablation")?;
        if ablation != self.config.ablation.name() {
            return Err(Error::Checkpoint(format!("checkpoint holds a `{ablation}` agent, config asks for `{}`", self.config.ablation.name())));
        }
        let updates = ck.meta("updates")?.parse().map_err(|_| Error::Checkpoint("bad update counter".into()))?;
        let mut nets: Vec<(String, &mut MlpNetwork)> = vec![(
            "actor".into(),
            match &mut self.actor {
                Actor::Diffusion(d) => d.net_mut(),
                Actor::Gaussian(g) => g.net_mut(),
            },
        )];
        let (online, target) = self.critics.networks_mut();
        nets.extend(online.iter_mut().enumerate().map(|(i, n)| (format!("critic{i}"), n)));
        nets.extend(target.iter_mut().enumerate().map(|(i, n)| (format!("target{i}"), n)));
        for (name, net) in nets {
            for (j, p) in net.params_mut().into_iter().enumerate() {
                let t = ck.tensor(&format!("{name}.p{j:02}"))?;
                if t.shape() != p.value.shape() {
                    return Err(Error::Checkpoint(format!("shape mismatch for {name}.p{j:02}: {:?} vs {:?}", t.shape(), p.value.shape())));
                }
                p.value = t.clone();
            }
        }
        let la = ck.tensor("log_alpha")?;
        if la.shape() != self.temperature.log_alpha.value.shape() {
            return Err(Error::Checkpoint("shape mismatch for log_alpha".into()));
        }
        self.temperature.log_alpha.value = la.clone();
        self.updates = updates;
        Ok(())
    }
}

/// `γ^{2k}/γ^K` for level `k` of `levels`.
fn gamma_weight(gamma: f64, k: usize, levels: usize) -> f64 {
    gamma.powi(2 * k as i32 - levels as i32)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::Transition;
    use crate::env::{make_env, RewardKind};
    use crate::rng::{seeded, uniform};

    fn small(ablation: Ablation) -> (TrainConfig, EnvSpec) {
        let spec = make_env("point_mass_dense").unwrap().spec().clone();
        let cfg = TrainConfig { hidden_units: 16, batch_size: 8, ablation, ..TrainConfig::for_env(&spec) };
        (cfg, spec)
    }

    fn filled_buffer(spec: &EnvSpec, n: usize, seed: u64) -> ReplayBuffer {
        let mut rng = seeded(seed);
        let mut b = ReplayBuffer::new(n).unwrap();
        for _ in 0..n {
            let s: Vec<f64> = (0..spec.obs_dim).map(|_| uniform(&mut rng, -1.0, 1.0)).collect();
            b.append(Transition {
                next_state: s.iter().map(|v| v * 0.9).collect(),
                state: s,
                action: (0..spec.action_dim).map(|_| uniform(&mut rng, -0.99, 0.99)).collect(),
                reward: uniform(&mut rng, -2.0, 0.0),
                done: false,
                goal: None,
            });
        }
        b
    }

    #[test]
    fn every_ablation_trains_and_acts_inside_bounds() {
        for ab in Ablation::ALL {
            let (cfg, spec) = small(ab);
            let mut rng = seeded(5);
            let mut agent = Agent::new(&cfg, &spec, &mut rng).unwrap();
            let buf = filled_buffer(&spec, 64, 1);
            for _ in 0..3 {
                let d = agent.train_step(&buf, &mut rng).unwrap();
                assert!(d.critic_loss.is_finite() && d.actor_loss.is_finite() && d.alpha > 0.0, "{ab:?}: {d:?}");
            }
            let s = buf.sample_batch(10, &mut rng).unwrap().states;
            for explore in [false, true] {
                let a = agent.act(&s, explore, &mut rng).unwrap();
                assert!(a.data().iter().all(|v| v.abs() < 1.0));
            }
            assert_eq!(agent.critics().online().len(), if ab.double() { 2 } else { 1 });
        }
    }

    #[test]
    fn zero_learning_rates_leave_parameters_bit_identical() {
        let (cfg, spec) = small(Ablation::Full);
        let cfg = TrainConfig { actor_lr: 0.0, critic_lr: 0.0, alpha_lr: 0.0, tau: 1.0, ..cfg };
        let mut rng = seeded(9);
        let mut agent = Agent::new(&cfg, &spec, &mut rng).unwrap();
        let before = agent.parameter_values();
        let buf = filled_buffer(&spec, 32, 2);
        for _ in 0..50 {
            let d = agent.train_step(&buf, &mut rng).unwrap();
            assert!(d.critic_loss > 0.0);
        }
        assert_eq!(agent.parameter_values(), before);
        assert_eq!(agent.updates(), 50);
    }

    #[test]
    fn checkpoint_restores_parameters() {
        let (cfg, spec) = small(Ablation::GaussianActor);
        let mut rng = seeded(3);
        let mut a = Agent::new(&cfg, &spec, &mut rng).unwrap();
        let buf = filled_buffer(&spec, 32, 4);
        a.train_step(&buf, &mut rng).unwrap();
        let ck = a.to_checkpoint();
        let mut b = Agent::new(&cfg, &spec, &mut seeded(99)).unwrap();
        assert_ne!(a.parameter_values(), b.parameter_values());
        b.load_checkpoint(&ck).unwrap();
        assert_eq!(a.parameter_values(), b.parameter_values());
        assert_eq!(b.updates(), 1);
        let (other, _) = small(Ablation::Full);
        let mut c = Agent::new(&other, &spec, &mut seeded(1)).unwrap();
        assert!(matches!(c.load_checkpoint(&ck), Err(Error::Checkpoint(_))));
    }

    #[test]
    fn too_small_buffer_is_a_usage_error() {
        let (cfg, spec) = small(Ablation::Full);
        let mut agent = Agent::new(&cfg, &spec, &mut seeded(0)).unwrap();
        let buf = filled_buffer(&spec, 4, 0);
        assert!(matches!(agent.train_step(&buf, &mut seeded(0)), Err(Error::Usage(_))));
        assert_eq!(spec.reward_kind, RewardKind::Dense);
    }

    #[test]
    fn discounted_weights() {
        assert_eq!(gamma_weight(0.5, 1, 2), 1.0);
        assert_eq!(gamma_weight(0.5, 2, 2), 0.25);
        assert_eq!(gamma_weight(0.5, 1, 4), 4.0);
    }
}
