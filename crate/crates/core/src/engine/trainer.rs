use super::agent::{Agent, StepDiagnostics};
use super::config::TrainConfig;
use super::evaluate::{agent_input, evaluate, EvalMetrics};
use super::her::her_relabel;
use super::replay::{ReplayBuffer, Transition};
use crate::actor::ACTION_BOUND;
use crate::env::{make_env, Environment, VisitGrid};
use crate::nn::Tensor;
use crate::rng::{derived, uniform, Rng};
use crate::{Error, Result};

struct Worker {
    env: Box<dyn Environment>,
    obs: Vec<f64>,
    episode: Vec<Transition>,
}

/// Reset seed of the `index`-th training episode.
pub fn episode_seed(base: u64, index: u64) -> u64 {
    base.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ index.wrapping_add(1).wrapping_mul(0xBF58_476D_1CE4_E5B9)
}

/// Round-robin data collection over `workers` environments feeding one agent.
///
/// The first `initial_random_trajectories` episodes use uniform random
/// actions and no gradient steps are taken until they have finished. After
/// that every `env_steps_per_update` environment steps trigger one
/// gradient step.
pub struct Trainer {
    env_name: String,
    agent: Agent,
    buffer: ReplayBuffer,
    workers: Vec<Worker>,
    next_worker: usize,
    env_steps: u64,
    episodes_started: u64,
    episodes_finished: u64,
    since_update: usize,
    grid: VisitGrid,
    last: Option<StepDiagnostics>,
    rng: Rng,
}

impl Trainer {
    pub fn new(config: &TrainConfig, env_name: &str) -> Result<Self> {
        let probe = make_env(env_name)?;
        let mut init_rng = derived(config.seed, 1);
        let agent = Agent::new(config, probe.spec(), &mut init_rng)?;
        let mut t = Trainer {
            env_name: env_name.to_string(),
            agent,
            buffer: ReplayBuffer::new(config.buffer_size)?,
            workers: Vec::new(),
            next_worker: 0,
            env_steps: 0,
            episodes_started: 0,
            episodes_finished: 0,
            since_update: 0,
            grid: VisitGrid::new(),
            last: None,
            rng: derived(config.seed, 2),
        };
        for _ in 0..config.workers {
            let mut env = make_env(env_name)?;
            let obs = env.reset(episode_seed(config.seed, t.episodes_started));
            t.episodes_started += 1;
            t.workers.push(Worker { env, obs, episode: Vec::new() });
        }
        Ok(t)
    }

    pub fn agent(&self) -> &Agent {
        &self.agent
    }

    pub fn agent_mut(&mut self) -> &mut Agent {
        &mut self.agent
    }

    pub fn env_name(&self) -> &str {
        &self.env_name
    }

    pub fn buffer(&self) -> &ReplayBuffer {
        &self.buffer
    }

    pub fn env_steps(&self) -> u64 {
        self.env_steps
    }

    /// Continues the step count of a restored run.
    pub fn set_env_steps(&mut self, steps: u64) {
        self.env_steps = steps;
    }

    pub fn episodes_finished(&self) -> u64 {
        self.episodes_finished
    }

    /// Positions visited during data collection.
    pub fn visit_grid(&self) -> &VisitGrid {
        &self.grid
    }

    pub fn last_diagnostics(&self) -> Option<StepDiagnostics> {
        self.last
    }

    pub fn warming_up(&self) -> bool {
        self.episodes_finished < self.agent.config().initial_random_trajectories as u64
    }

    /// Collects and trains until `total` environment steps have been taken.
    pub fn run_until(&mut self, total: u64) -> Result<()> {
        while self.env_steps < total {
            self.env_step()?;
        }
        Ok(())
    }

    /// One environment step on the next worker, then any due gradient steps.
    ///
    /// A gradient step with non-finite diagnostics is a training error; the
    /// offending diagnostics stay readable through [`Trainer::last_diagnostics`].
    pub fn env_step(&mut self) -> Result<()> {
        let cfg = self.agent.config().clone();
        let warm = self.warming_up();
        let w = self.next_worker;
        self.next_worker = (w + 1) % self.workers.len();
        let worker = &mut self.workers[w];
        let input = agent_input(worker.env.as_ref(), &worker.obs);
        let action: Vec<f64> = if warm {
            (0..worker.env.spec().action_dim).map(|_| uniform(&mut self.rng, -ACTION_BOUND, ACTION_BOUND)).collect()
        } else {
            self.agent.act(&Tensor::row_vector(&input), true, &mut self.rng)?.into_data()
        };
        let step = worker.env.step(&action);
        self.env_steps += 1;
        if let Some(p) = worker.env.position() {
            self.grid.update(p);
        }
        let tr = Transition {
            state: worker.obs.clone(),
            action,
            reward: step.reward,
            next_state: step.obs.clone(),
            done: step.terminated,
            goal: worker.env.goal(),
        };
        let relabel = cfg.her && tr.goal.is_some();
        if relabel {
            worker.episode.push(tr);
        } else {
            self.buffer.append(tr);
        }
        let done = step.done();
        worker.obs = step.obs;
        if done {
            if relabel {
                let env = worker.env.as_ref();
                let achieved = |s: &[f64]| env.achieved_goal(s).expect("goal env reports achieved goals");
                let reward = |a: &[f64], g: &[f64]| env.goal_reward(a, g).expect("goal env rewards goals");
                for t in her_relabel(&worker.episode, cfg.her_k, achieved, reward, &mut self.rng) {
                    self.buffer.append(t);
                }
                worker.episode.clear();
            }
            worker.obs = worker.env.reset(episode_seed(cfg.seed, self.episodes_started));
            self.episodes_started += 1;
            self.episodes_finished += 1;
        }
        if warm || self.buffer.len() < cfg.batch_size {
            return Ok(());
        }
        self.since_update += 1;
        while self.since_update >= cfg.env_steps_per_update {
            self.since_update -= cfg.env_steps_per_update;
            let d = self.agent.train_step(&self.buffer, &mut self.rng)?;
            self.last = Some(d);
            check_finite(&d)?;
        }
        Ok(())
    }

    pub fn evaluate(&self, episodes: usize, seed: u64) -> Result<EvalMetrics> {
        let name = self.env_name.clone();
        evaluate(&self.agent, move || make_env(&name), episodes, &mut derived(seed, 3))
    }
}

impl std::fmt::Debug for Trainer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Trainer").field("env", &self.env_name).field("env_steps", &self.env_steps).finish()
    }
}

/// Fails with a training error when any diagnostic is non-finite.
pub fn check_finite(d: &StepDiagnostics) -> Result<()> {
    let vals = [d.critic_loss, d.actor_loss, d.alpha, d.alpha_loss, d.log_prob, d.mean_q];
    if vals.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Training { param: "diagnostics".into(), msg: format!("non-finite step diagnostics {d:?}") })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::make_env;

    fn tiny(env: &str) -> TrainConfig {
        let spec = make_env(env).unwrap().spec().clone();
        TrainConfig { hidden_units: 16, batch_size: 16, initial_random_trajectories: 2, seed: 4, ..TrainConfig::for_env(&spec) }
    }

    #[test]
    fn warmup_precedes_any_gradient_step() {
        let cfg = tiny("point_mass_dense");
        let mut t = Trainer::new(&cfg, "point_mass_dense").unwrap();
        // two 50-step episodes over four workers finish after 4·49 + 2 steps
        t.run_until(197).unwrap();
        assert!(t.warming_up());
        assert_eq!(t.agent().updates(), 0);
        t.run_until(198).unwrap();
        assert!(!t.warming_up());
        t.run_until(260).unwrap();
        assert_eq!(t.env_steps(), 260);
        assert_eq!(t.agent().updates(), 62);
        assert_eq!(t.buffer().len(), 260);
    }

    #[test]
    fn sparse_ratio_halves_the_update_count() {
        let cfg = TrainConfig { workers: 2, ..tiny("point_mass_goal") };
        let mut t = Trainer::new(&cfg, "point_mass_goal").unwrap();
        while t.warming_up() {
            t.env_step().unwrap();
        }
        let start = t.env_steps();
        t.run_until(start + 40).unwrap();
        assert_eq!(t.agent().updates(), 20);
        // relabeled episodes add four copies per step
        assert_eq!(t.buffer().len() % 5, 0);
    }

    #[test]
    fn runs_are_deterministic_given_the_seed() {
        let cfg = tiny("predator_prey");
        let run = || {
            let mut t = Trainer::new(&cfg, "predator_prey").unwrap();
            t.run_until(500).unwrap();
            (t.agent().parameter_values(), t.visit_grid().clone(), t.evaluate(3, 7).unwrap())
        };
        let (a, b) = (run(), run());
        assert_eq!(a.0, b.0);
        assert_eq!(a.1, b.1);
        assert_eq!(a.2, b.2);
        assert!(a.1.counts().iter().sum::<u64>() == 500);
    }

    #[test]
    fn non_finite_diagnostics_are_rejected() {
        let d = StepDiagnostics { critic_loss: f64::NAN, ..Default::default() };
        assert!(matches!(check_finite(&d), Err(Error::Training { .. })));
        assert!(check_finite(&StepDiagnostics::default()).is_ok());
    }
}
