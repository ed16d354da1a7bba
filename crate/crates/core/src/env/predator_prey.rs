use super::{clamp_action, EnvSpec, Environment, RewardKind, Step, StepInfo};
use crate::rng::{derived, uniform, Rng};
use std::f64::consts::PI;

pub const GOAL_RADIUS: f64 = 0.05;
pub const CATCH_RADIUS: f64 = 0.1;
pub const FOV_HALF_ANGLE: f64 = PI / 3.0;
const PREY_SPEED: f64 = 0.04;
const PREDATOR_SPEED: f64 = 0.03;
const PROXIMITY_SENSE: f64 = 0.2;
const MIN_SPAWN_DISTANCE: f64 = 0.3;
const MIN_GOAL_DISTANCE: f64 = 0.4;
/// Reported distance to the predator before the first sighting.
pub const UNSEEN_DISTANCE: f64 = 2.0;

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

fn toward(from: [f64; 2], to: [f64; 2], max_step: f64) -> [f64; 2] {
    let d = dist(from, to);
    if d <= max_step {
        return to;
    }
    let s = max_step / d;
    [from[0] + s * (to[0] - from[0]), from[1] + s * (to[1] - from[1])]
}

/// Whether `point` lies inside the view cone at `origin` facing `heading` (radians).
pub fn in_field_of_view(origin: [f64; 2], heading: f64, point: [f64; 2]) -> bool {
    let (dx, dy) = (point[0] - origin[0], point[1] - origin[1]);
    let norm = (dx * dx + dy * dy).sqrt();
    if norm == 0.0 {
        return true;
    }
    let cos = (dx * heading.cos() + dy * heading.sin()) / norm;
    cos >= FOV_HALF_ANGLE.cos()
}

/// Prey steering to target coordinates in the unit square while a scripted
/// pursuer closes in at a lower speed.
///
/// Observation: `[x, y, cos h, sin h, px - x, py - y, gx - x, gy - y, ‖p - x‖, puff]`
/// where `p` is where the predator was last seen (inside the view cone or
/// close by). Before any sighting the offset is zero and the distance is
/// [`UNSEEN_DISTANCE`].
#[derive(Clone, Debug)]
pub struct PredatorPrey {
    spec: EnvSpec,
    prey: [f64; 2],
    heading: f64,
    predator: [f64; 2],
    goal: [f64; 2],
    seen: Option<[f64; 2]>,
    puff: bool,
    caught_ever: bool,
    steps: usize,
    finished: Option<(bool, bool)>,
}

impl Default for PredatorPrey {
    fn default() -> Self {
        Self::new()
    }
}

impl PredatorPrey {
    pub fn new() -> Self {
        PredatorPrey {
            spec: EnvSpec { name: "predator_prey", obs_dim: 10, action_dim: 2, max_steps: 200, reward_kind: RewardKind::Dense, goal_dim: None },
            prey: [0.5; 2],
            heading: 0.0,
            predator: [0.0; 2],
            goal: [1.0; 2],
            seen: None,
            puff: false,
            caught_ever: false,
            steps: 0,
            finished: None,
        }
    }

    pub fn prey(&self) -> [f64; 2] {
        self.prey
    }

    pub fn heading(&self) -> f64 {
        self.heading
    }

    pub fn predator(&self) -> [f64; 2] {
        self.predator
    }

    pub fn goal_position(&self) -> [f64; 2] {
        self.goal
    }

    pub fn last_sighting(&self) -> Option<[f64; 2]> {
        self.seen
    }

    /// Whether the predator has come within the catch radius this episode.
    pub fn caught_ever(&self) -> bool {
        self.caught_ever
    }

    pub fn set_positions(&mut self, prey: [f64; 2], heading: f64, predator: [f64; 2], goal: [f64; 2]) {
        self.prey = prey;
        self.heading = heading;
        self.predator = predator;
        self.goal = goal;
    }

    fn spawn_predator(&mut self, rng: &mut Rng) {
        for _ in 0..10_000 {
            let p = [uniform(rng, 0.0, 1.0), uniform(rng, 0.0, 1.0)];
            if dist(p, self.prey) >= MIN_SPAWN_DISTANCE && !in_field_of_view(self.prey, self.heading, p) {
                self.predator = p;
                return;
            }
        }
        // behind the prey, clipped into the arena
        let back = self.heading + PI;
        self.predator = [(self.prey[0] + 0.35 * back.cos()).clamp(0.0, 1.0), (self.prey[1] + 0.35 * back.sin()).clamp(0.0, 1.0)];
    }

    fn visible(&self) -> bool {
        dist(self.prey, self.predator) <= PROXIMITY_SENSE || in_field_of_view(self.prey, self.heading, self.predator)
    }

    fn observe(&self) -> Vec<f64> {
        let (gx, gy) = (self.goal[0] - self.prey[0], self.goal[1] - self.prey[1]);
        let (px, py, pd) = match self.seen {
            Some(p) => {
                let (dx, dy) = (p[0] - self.prey[0], p[1] - self.prey[1]);
                (dx, dy, (dx * dx + dy * dy).sqrt())
            }
            None => (0.0, 0.0, UNSEEN_DISTANCE),
        };
        vec![
            self.prey[0],
            self.prey[1],
            self.heading.cos(),
            self.heading.sin(),
            px,
            py,
            gx,
            gy,
            pd,
            if self.puff { 1.0 } else { 0.0 },
        ]
    }
}

impl Environment for PredatorPrey {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn reset(&mut self, seed: u64) -> Vec<f64> {
        let mut rng = derived(seed, 0);
        self.prey = [uniform(&mut rng, 0.1, 0.9), uniform(&mut rng, 0.1, 0.9)];
        self.heading = uniform(&mut rng, -PI, PI);
        loop {
            self.goal = [uniform(&mut rng, 0.1, 0.9), uniform(&mut rng, 0.1, 0.9)];
            if dist(self.goal, self.prey) >= MIN_GOAL_DISTANCE {
                break;
            }
        }
        self.spawn_predator(&mut derived(seed, 1));
        self.seen = None;
        self.puff = false;
        self.caught_ever = false;
        self.steps = 0;
        self.finished = None;
        self.observe()
    }

    fn step(&mut self, action: &[f64]) -> Step {
        let (a, clamped) = clamp_action(action);
        if let Some((terminated, truncated)) = self.finished {
            return Step { obs: self.observe(), reward: 0.0, terminated, truncated, info: StepInfo { clamped, ..Default::default() } };
        }
        let target = [(a[0] + 1.0) / 2.0, (a[1] + 1.0) / 2.0];
        let next = toward(self.prey, target, PREY_SPEED);
        if dist(next, self.prey) > 1e-12 {
            self.heading = (next[1] - self.prey[1]).atan2(next[0] - self.prey[0]);
        }
        self.prey = next;
        self.predator = toward(self.predator, self.prey, PREDATOR_SPEED);
        if self.visible() {
            self.seen = Some(self.predator);
        }
        self.steps += 1;

        let success = dist(self.prey, self.goal) < GOAL_RADIUS;
        let caught = dist(self.prey, self.predator) < CATCH_RADIUS;
        self.puff = caught;
        self.caught_ever |= caught;
        let reward = if success { 1.0 } else { 0.0 } - if caught { 1.0 } else { 0.0 };
        let terminated = success;
        let truncated = !terminated && self.steps >= self.spec.max_steps;
        if terminated || truncated {
            self.finished = Some((terminated, truncated));
        }
        Step { obs: self.observe(), reward, terminated, truncated, info: StepInfo { clamped, success, caught } }
    }

    fn position(&self) -> Option<[f64; 2]> {
        Some(self.prey)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn predator_spawns_out_of_sight_and_away() {
        let mut env = PredatorPrey::new();
        for seed in 0..100 {
            env.reset(seed);
            assert!(!in_field_of_view(env.prey(), env.heading(), env.predator()), "seed {seed}");
            assert!(dist(env.prey(), env.predator()) >= MIN_SPAWN_DISTANCE);
        }
    }

    #[test]
    fn initial_observation_carries_the_unseen_sentinel() {
        let mut env = PredatorPrey::new();
        let obs = env.reset(5);
        assert_eq!(obs.len(), 10);
        assert_eq!(&obs[4..6], &[0.0, 0.0]);
        assert_eq!(obs[8], UNSEEN_DISTANCE);
        assert_eq!(env.last_sighting(), None);
        assert_eq!(obs[9], 0.0);
    }

    #[test]
    fn close_predator_costs_one_per_step() {
        let mut env = PredatorPrey::new();
        env.reset(0);
        env.set_positions([0.5, 0.5], 0.0, [0.45, 0.5], [0.9, 0.9]);
        // stay put: target equals the current position
        let s = env.step(&[0.0, 0.0]);
        assert_eq!(s.reward, -1.0);
        assert!(s.info.caught);
        assert_eq!(s.obs[9], 1.0);
        assert!(env.caught_ever());
    }

    #[test]
    fn reaching_the_goal_pays_and_ends() {
        let mut env = PredatorPrey::new();
        env.reset(0);
        env.set_positions([0.5, 0.5], 0.0, [0.0, 0.0], [0.52, 0.5]);
        let s = env.step(&[0.04, 0.0]);
        assert_eq!(s.reward, 1.0);
        assert!(s.terminated);
    }

    #[test]
    fn pursuit_never_increases_distance_to_a_stationary_prey() {
        let mut env = PredatorPrey::new();
        for seed in 0..20 {
            let obs = env.reset(seed);
            let hold = [2.0 * obs[0] - 1.0, 2.0 * obs[1] - 1.0];
            let mut last = dist(env.prey(), env.predator());
            for _ in 0..30 {
                env.step(&hold);
                let d = dist(env.prey(), env.predator());
                assert!(d <= last + 1e-12);
                last = d;
            }
        }
    }

    #[test]
    fn prey_speed_is_capped() {
        let mut env = PredatorPrey::new();
        env.reset(1);
        let before = env.prey();
        env.step(&[1.0, 1.0]);
        assert!(dist(before, env.prey()) <= PREY_SPEED + 1e-12);
    }

    #[test]
    fn sighting_updates_only_when_visible() {
        let mut env = PredatorPrey::new();
        env.reset(0);
        // facing +x with the predator straight ahead
        env.set_positions([0.2, 0.5], 0.0, [0.8, 0.5], [0.2, 0.9]);
        let s = env.step(&[2.0 * 0.24 - 1.0, 0.0]);
        let (p, x) = (env.predator(), env.prey());
        assert_eq!(env.last_sighting(), Some(p));
        assert_eq!(&s.obs[4..6], &[p[0] - x[0], p[1] - x[1]]);
        assert!((s.obs[8] - dist(p, x)).abs() < 1e-15);
        // turn to face +y; predator now behind and far
        env.set_positions([0.2, 0.2], PI / 2.0, [0.2, 0.9], [0.9, 0.9]);
        let s = env.step(&[2.0 * 0.2 - 1.0, 2.0 * 0.1 - 1.0]);
        assert_eq!(env.last_sighting(), Some(p));
        let x = env.prey();
        assert_eq!(&s.obs[4..6], &[p[0] - x[0], p[1] - x[1]]);
    }
}
