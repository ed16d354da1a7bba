use super::{clamp_action, EnvSpec, Environment, RewardKind, Step, StepInfo};
use crate::rng::{derived, uniform};

pub const GOAL_TOLERANCE: f64 = 0.05;
const DT: f64 = 0.05;
const ACCEL_GAIN: f64 = 10.0;
const MAX_STEPS: usize = 50;
/// Spawn margin from each wall, as a fraction of the arena side.
const SPAWN_MARGIN: f64 = 0.05;
const MIN_GOAL_DISTANCE: f64 = 0.1;
/// Arena side of the dense variant.
pub const DENSE_ARENA: f64 = 1.0;
/// Arena side of the goal variant. Random motion sweeps a unit square often
/// enough to stumble on the goal, so the goal variant gets more room.
pub const GOAL_ARENA: f64 = 2.0;

/// `0` within [`GOAL_TOLERANCE`] of the goal, `-1` otherwise.
pub fn sparse_reward_fn(achieved: &[f64], goal: &[f64]) -> f64 {
    let d2: f64 = achieved.iter().zip(goal).map(|(a, g)| (a - g).powi(2)).sum();
    if d2.sqrt() < GOAL_TOLERANCE {
        0.0
    } else {
        -1.0
    }
}

/// Planar double integrator in a square arena; walls stop motion into them.
///
/// The dense variant observes `[pos, vel, goal - pos]` and pays `-‖pos - goal‖`.
/// The goal variant observes `[pos, vel]`, exposes the goal separately, pays
/// the sparse reward and ends on success.
#[derive(Clone, Debug)]
pub struct PointMass {
    spec: EnvSpec,
    arena: f64,
    pos: [f64; 2],
    vel: [f64; 2],
    goal: [f64; 2],
    steps: usize,
    finished: Option<(bool, bool)>,
}

impl PointMass {
    fn with_spec(spec: EnvSpec, arena: f64) -> Self {
        PointMass { spec, arena, pos: [0.5; 2], vel: [0.0; 2], goal: [0.5; 2], steps: 0, finished: None }
    }

    pub fn dense() -> Self {
        Self::with_spec(EnvSpec {
            name: "point_mass_dense",
            obs_dim: 6,
            action_dim: 2,
            max_steps: MAX_STEPS,
            reward_kind: RewardKind::Dense,
            goal_dim: None,
        }, DENSE_ARENA)
    }

    pub fn goal() -> Self {
        Self::with_spec(EnvSpec {
            name: "point_mass_goal",
            obs_dim: 4,
            action_dim: 2,
            max_steps: MAX_STEPS,
            reward_kind: RewardKind::Sparse,
            goal_dim: Some(2),
        }, GOAL_ARENA)
    }

    pub fn arena(&self) -> f64 {
        self.arena
    }

    fn is_sparse(&self) -> bool {
        self.spec.reward_kind == RewardKind::Sparse
    }

    /// Overrides the current state, keeping the goal and step count.
    pub fn set_state(&mut self, pos: [f64; 2], vel: [f64; 2]) {
        self.pos = pos;
        self.vel = vel;
    }

    pub fn pos(&self) -> [f64; 2] {
        self.pos
    }

    pub fn set_goal(&mut self, goal: [f64; 2]) {
        self.goal = goal;
    }

    pub fn distance(&self) -> f64 {
        ((self.pos[0] - self.goal[0]).powi(2) + (self.pos[1] - self.goal[1]).powi(2)).sqrt()
    }

    pub fn observe(&self) -> Vec<f64> {
        let mut obs = vec![self.pos[0], self.pos[1], self.vel[0], self.vel[1]];
        if !self.is_sparse() {
            obs.extend([self.goal[0] - self.pos[0], self.goal[1] - self.pos[1]]);
        }
        obs
    }
}

impl Environment for PointMass {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn reset(&mut self, seed: u64) -> Vec<f64> {
        let mut rng = derived(seed, 0);
        let (lo, hi) = (SPAWN_MARGIN * self.arena, (1.0 - SPAWN_MARGIN) * self.arena);
        self.pos = [uniform(&mut rng, lo, hi), uniform(&mut rng, lo, hi)];
        loop {
            self.goal = [uniform(&mut rng, lo, hi), uniform(&mut rng, lo, hi)];
            if self.distance() >= MIN_GOAL_DISTANCE {
                break;
            }
        }
        self.vel = [0.0; 2];
        self.steps = 0;
        self.finished = None;
        self.observe()
    }

    fn step(&mut self, action: &[f64]) -> Step {
        let (a, clamped) = clamp_action(action);
        if let Some((terminated, truncated)) = self.finished {
            return Step { obs: self.observe(), reward: 0.0, terminated, truncated, info: StepInfo { clamped, ..Default::default() } };
        }
        for i in 0..2 {
            self.vel[i] += ACCEL_GAIN * a[i] * DT;
            self.pos[i] += self.vel[i] * DT;
            if self.pos[i] < 0.0 || self.pos[i] > self.arena {
                self.pos[i] = self.pos[i].clamp(0.0, self.arena);
                self.vel[i] = 0.0;
            }
        }
        self.steps += 1;
        let success = self.distance() < GOAL_TOLERANCE;
        let reward = if self.is_sparse() { sparse_reward_fn(&self.pos, &self.goal) } else { -self.distance() };
        let terminated = self.is_sparse() && success;
        let truncated = !terminated && self.steps >= self.spec.max_steps;
        if terminated || truncated {
            self.finished = Some((terminated, truncated));
        }
        Step { obs: self.observe(), reward, terminated, truncated, info: StepInfo { clamped, success, caught: false } }
    }

    fn goal(&self) -> Option<Vec<f64>> {
        self.is_sparse().then(|| self.goal.to_vec())
    }

    fn achieved_goal(&self, obs: &[f64]) -> Option<Vec<f64>> {
        self.is_sparse().then(|| obs[..2].to_vec())
    }

    fn goal_reward(&self, achieved: &[f64], goal: &[f64]) -> Option<f64> {
        self.is_sparse().then(|| sparse_reward_fn(achieved, goal))
    }

    fn position(&self) -> Option<[f64; 2]> {
        Some([self.pos[0] / self.arena, self.pos[1] / self.arena])
    }
}
