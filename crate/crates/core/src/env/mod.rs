//! Small continuous-control tasks with actions in `[-1, 1]^d`.

mod grid;
mod pendulum;
mod point_mass;
mod predator_prey;

pub use grid::{VisitGrid, GRID_SIZE};
pub use pendulum::Pendulum;
pub use point_mass::{sparse_reward_fn, PointMass, GOAL_TOLERANCE};
pub use predator_prey::{in_field_of_view, PredatorPrey, CATCH_RADIUS, FOV_HALF_ANGLE, GOAL_RADIUS, UNSEEN_DISTANCE};

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RewardKind {
    Dense,
    Sparse,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnvSpec {
    pub name: &'static str,
    pub obs_dim: usize,
    pub action_dim: usize,
    pub max_steps: usize,
    pub reward_kind: RewardKind,
    /// Present for goal-conditioned tasks; the goal is fed to the agent next to the observation.
    pub goal_dim: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct StepInfo {
    /// The action had a component outside `[-1, 1]` and was clamped.
    pub clamped: bool,
    pub success: bool,
    pub caught: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Step {
    pub obs: Vec<f64>,
    pub reward: f64,
    /// Episode ended by the task itself.
    pub terminated: bool,
    /// Episode ended by the step limit.
    pub truncated: bool,
    pub info: StepInfo,
}

impl Step {
    pub fn done(&self) -> bool {
        self.terminated || self.truncated
    }
}

pub trait Environment: Send {
    fn spec(&self) -> &EnvSpec;

    fn reset(&mut self, seed: u64) -> Vec<f64>;

    /// Advances one step. Stepping a finished episode returns the final
    /// observation with zero reward and both end flags unchanged.
    fn step(&mut self, action: &[f64]) -> Step;

    /// Current goal of a goal-conditioned task.
    fn goal(&self) -> Option<Vec<f64>> {
        None
    }

    /// The part of an observation that is compared against goals.
    fn achieved_goal(&self, _obs: &[f64]) -> Option<Vec<f64>> {
        None
    }

    /// Reward for having achieved `achieved` while pursuing `goal`.
    fn goal_reward(&self, _achieved: &[f64], _goal: &[f64]) -> Option<f64> {
        None
    }

    /// Planar position tracked by the visit grid, scaled to the unit square.
    fn position(&self) -> Option<[f64; 2]> {
        None
    }
}

pub const ENV_NAMES: [&str; 4] = ["point_mass_dense", "point_mass_goal", "pendulum", "predator_prey"];

pub fn make_env(name: &str) -> Result<Box<dyn Environment>> {
    Ok(match name {
        "point_mass_dense" => Box::new(PointMass::dense()),
        "point_mass_goal" => Box::new(PointMass::goal()),
        "pendulum" => Box::new(Pendulum::new()),
        "predator_prey" => Box::new(PredatorPrey::new()),
        other => return Err(Error::Config(format!("unknown environment `{other}`; expected one of {}", ENV_NAMES.join(", ")))),
    })
}

/// Clamps every component into `[-1, 1]`, reporting whether anything changed.
pub(crate) fn clamp_action(action: &[f64]) -> (Vec<f64>, bool) {
    let mut clamped = false;
    let out = action
        .iter()
        .map(|&a| {
            let c = if a.is_nan() { 0.0 } else { a.clamp(-1.0, 1.0) };
            clamped |= c != a;
            c
        })
        .collect();
    (out, clamped)
}
