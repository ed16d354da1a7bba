use super::{clamp_action, EnvSpec, Environment, RewardKind, Step, StepInfo};
use crate::rng::{derived, uniform};
use std::f64::consts::PI;

const DT: f64 = 0.05;
const GRAVITY: f64 = 10.0;
const MASS: f64 = 1.0;
const LENGTH: f64 = 1.0;
const MAX_TORQUE: f64 = 2.0;
const MAX_SPEED: f64 = 8.0;

fn wrap_angle(th: f64) -> f64 {
    (th + PI).rem_euclid(2.0 * PI) - PI
}

/// Torque-limited swing-up; observation `[cos θ, sin θ, θ̇]`, upright at `θ = 0`.
#[derive(Clone, Debug)]
pub struct Pendulum {
    spec: EnvSpec,
    theta: f64,
    theta_dot: f64,
    steps: usize,
    finished: bool,
}

impl Default for Pendulum {
    fn default() -> Self {
        Self::new()
    }
}

impl Pendulum {
    pub fn new() -> Self {
        Pendulum {
            spec: EnvSpec { name: "pendulum", obs_dim: 3, action_dim: 1, max_steps: 200, reward_kind: RewardKind::Dense, goal_dim: None },
            theta: 0.0,
            theta_dot: 0.0,
            steps: 0,
            finished: false,
        }
    }

    pub fn set_state(&mut self, theta: f64, theta_dot: f64) {
        self.theta = theta;
        self.theta_dot = theta_dot;
    }

    fn observe(&self) -> Vec<f64> {
        vec![self.theta.cos(), self.theta.sin(), self.theta_dot]
    }
}

impl Environment for Pendulum {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn reset(&mut self, seed: u64) -> Vec<f64> {
        let mut rng = derived(seed, 0);
        self.theta = uniform(&mut rng, -PI, PI);
        self.theta_dot = uniform(&mut rng, -1.0, 1.0);
        self.steps = 0;
        self.finished = false;
        self.observe()
    }

    fn step(&mut self, action: &[f64]) -> Step {
        let (a, clamped) = clamp_action(action);
        if self.finished {
            return Step { obs: self.observe(), reward: 0.0, terminated: false, truncated: true, info: StepInfo { clamped, ..Default::default() } };
        }
        let th = wrap_angle(self.theta);
        let reward = -(th * th + 0.1 * self.theta_dot * self.theta_dot + 0.001 * a[0] * a[0]);
        let torque = MAX_TORQUE * a[0];
        let acc = 3.0 * GRAVITY / (2.0 * LENGTH) * self.theta.sin() + 3.0 / (MASS * LENGTH * LENGTH) * torque;
        self.theta_dot = (self.theta_dot + acc * DT).clamp(-MAX_SPEED, MAX_SPEED);
        self.theta += self.theta_dot * DT;
        self.steps += 1;
        self.finished = self.steps >= self.spec.max_steps;
        Step { obs: self.observe(), reward, terminated: false, truncated: self.finished, info: StepInfo { clamped, ..Default::default() } }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn upright_at_rest_is_an_equilibrium_with_zero_cost() {
        let mut p = Pendulum::new();
        p.reset(0);
        p.set_state(0.0, 0.0);
        let s = p.step(&[0.0]);
        assert_eq!(s.reward, 0.0);
        assert_eq!(s.obs, vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn hanging_costs_pi_squared() {
        let mut p = Pendulum::new();
        p.reset(0);
        p.set_state(PI, 0.0);
        let s = p.step(&[1.0]);
        assert!((s.reward + (PI * PI + 0.001)).abs() < 1e-12);
    }

    #[test]
    fn angle_wrapping() {
        assert!((wrap_angle(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-12);
        assert!((wrap_angle(-0.1) + 0.1).abs() < 1e-15);
    }
}
