//! Numerical self-checks run by the `check` subcommand.

use std::fmt;
use std::time::{Duration, Instant};

use d2ac::actor::{
    one_step_bound, prepare_policy_objective, prepare_regression_objective, tanh_log_prob, Denoiser, NoiseSchedule, OneStepOracle,
    PolicyBatch,
};
use d2ac::critic::{clip_select, expected_value, project_dist, project_twohot, softmax, two_hot, CriticObjective, QEstimate, ReturnDistribution, Support};
use d2ac::engine::{coverage_metrics, her_relabel, polyak_update, Transition};
use d2ac::nn::{finite_diff_check, DoubleDouble, MlpConfig, MlpNetwork, Quadratic, Real, Tensor};
use d2ac::rng::{normal_vec, seeded, uniform, Rng};

/// Signature of a categorical projection `(shifted atoms, probabilities, support) -> distribution`.
pub type ProjectFn = fn(&[f64], &ReturnDistribution, &Support) -> ReturnDistribution;

pub const MASS_TOLERANCE: f64 = 1e-12;
pub const MEAN_TOLERANCE: f64 = 1e-10;
pub const GRAD_TOLERANCE: f64 = 1e-6;
pub const LOG_PROB_TOLERANCE: f64 = 1e-9;
pub const RANDOM_CASES: usize = 1000;

#[derive(Clone, Debug)]
pub struct CheckResult {
    pub module: &'static str,
    pub property: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
}

#[derive(Clone, Debug, Default)]
pub struct CheckReport {
    pub results: Vec<CheckResult>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.results.iter().all(|r| r.passed)
    }

    pub fn failures(&self) -> Vec<&CheckResult> {
        self.results.iter().filter(|r| !r.passed).collect()
    }

    pub fn get(&self, module: &str, property: &str) -> Option<&CheckResult> {
        self.results.iter().find(|r| r.module == module && r.property == property)
    }

    pub fn total_time(&self) -> Duration {
        self.results.iter().map(|r| r.elapsed).sum()
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.results {
            writeln!(
                f,
                "{:4} {:>9.3}s  {}/{}: {}",
                if r.passed { "ok" } else { "FAIL" },
                r.elapsed.as_secs_f64(),
                r.module,
                r.property,
                r.detail
            )?;
        }
        let failed = self.failures().len();
        write!(f, "{} checks, {} failed, {:.2}s", self.results.len(), failed, self.total_time().as_secs_f64())
    }
}

/// Outcome of a single check: pass flag and a one-line detail.
type Outcome = (bool, String);

struct Suite {
    report: CheckReport,
}

impl Suite {
    fn run(&mut self, module: &'static str, property: &'static str, f: impl FnOnce() -> Outcome) {
        let start = Instant::now();
        let (passed, detail) = match std::panic::catch_unwind(std::panic::AssertUnwindSafe(f)) {
            Ok(o) => o,
            Err(_) => (false, "panicked".to_string()),
        };
        self.report.results.push(CheckResult { module, property, passed, detail, elapsed: start.elapsed() });
    }
}

fn random_support(rng: &mut Rng) -> Support {
    let lo = uniform(rng, -100.0, 0.0);
    let width = uniform(rng, 1.0, 200.0);
    let atoms = 2 + (uniform(rng, 0.0, 200.0) as usize);
    Support::new(lo, lo + width, atoms).expect("valid support")
}

fn random_distribution(rng: &mut Rng, n: usize) -> ReturnDistribution {
    let scale = uniform(rng, 0.1, 5.0);
    let logits: Vec<f64> = normal_vec(rng, n).into_iter().map(|v| v * scale).collect();
    ReturnDistribution { probs: softmax(&logits) }
}

fn shifted_atoms(rng: &mut Rng, support: &Support) -> Vec<f64> {
    let width = support.v_max() - support.v_min();
    let r = uniform(rng, -width, width);
    let gamma = uniform(rng, 0.5, 1.0);
    support.atoms().iter().map(|z| r + gamma * z).collect()
}

/// Mass of `Φ(r + γz, p)` stays one.
pub fn check_projection_mass(project: ProjectFn) -> Outcome {
    let mut rng = seeded(11);
    let mut worst = 0.0f64;
    for _ in 0..RANDOM_CASES {
        let support = random_support(&mut rng);
        let p = random_distribution(&mut rng, support.len());
        let shifted = shifted_atoms(&mut rng, &support);
        let out = project(&shifted, &p, &support);
        worst = worst.max((out.mass() - 1.0).abs());
        if out.probs.iter().any(|v| *v < 0.0 || !v.is_finite()) {
            return (false, "negative or non-finite mass".into());
        }
    }
    (worst < MASS_TOLERANCE, format!("max |mass - 1| = {worst:.2e} over {RANDOM_CASES} cases"))
}

fn check_twohot_mean() -> Outcome {
    let mut rng = seeded(12);
    let mut worst = 0.0f64;
    for _ in 0..RANDOM_CASES {
        let support = random_support(&mut rng);
        let z = uniform(&mut rng, support.v_min(), support.v_max());
        let h = two_hot(&support, z);
        worst = worst.max((expected_value(&h, &support) - z).abs() / (1.0 + z.abs()));
    }
    (worst < MEAN_TOLERANCE, format!("max relative mean error {worst:.2e}"))
}

fn check_one_hot_equivalence() -> Outcome {
    let mut rng = seeded(13);
    let mut worst = 0.0f64;
    for _ in 0..RANDOM_CASES {
        let support = random_support(&mut rng);
        let k = (uniform(&mut rng, 0.0, support.len() as f64) as usize).min(support.len() - 1);
        let p = ReturnDistribution::one_hot(support.len(), k);
        let shifted = shifted_atoms(&mut rng, &support);
        let a = project_dist(&shifted, &p, &support);
        let b = project_twohot(&shifted, &p, &support);
        worst = a.probs.iter().zip(&b.probs).map(|(x, y)| (x - y).abs()).fold(worst, f64::max);
    }
    (worst < MASS_TOLERANCE, format!("max |Φ_dist - Φ_twohot| = {worst:.2e}"))
}

fn check_clip_select() -> Outcome {
    let mut rng = seeded(14);
    for _ in 0..RANDOM_CASES {
        let support = random_support(&mut rng);
        let d1 = random_distribution(&mut rng, support.len());
        let d2 = random_distribution(&mut rng, support.len());
        let chosen = clip_select(&d1, &d2, &support);
        let (m1, m2) = (expected_value(&d1, &support), expected_value(&d2, &support));
        if expected_value(chosen, &support) != m1.min(m2) {
            return (false, format!("picked mean {} from {m1} and {m2}", expected_value(chosen, &support)));
        }
        let twin = d1.clone();
        if !std::ptr::eq(clip_select(&d1, &twin, &support), &d1) {
            return (false, "tie did not keep the first argument".into());
        }
    }
    (true, format!("{RANDOM_CASES} pairs, ties keep the first"))
}

fn grad_outcome(errors: Vec<f64>) -> Outcome {
    let worst = errors.iter().copied().fold(0.0, f64::max);
    (worst < GRAD_TOLERANCE, format!("max relative error {worst:.2e} over {} networks", errors.len()))
}

fn check_mlp_gradients() -> Outcome {
    grad_outcome(
        (0..10)
            .map(|seed| {
                let mut cfg = MlpConfig::new(4, vec![3, 2]).hidden(10, 2);
                cfg.head_scale = 1.0;
                let mut net = MlpNetwork::new(cfg, &mut seeded(seed)).unwrap();
                let mut rng = seeded(1000 + seed);
                let x = Tensor::matrix(3, 4, normal_vec(&mut rng, 12));
                let loss = Quadratic {
                    linear: vec![normal_vec(&mut rng, 9), normal_vec(&mut rng, 6)],
                    quadratic: vec![vec![0.0; 9], normal_vec(&mut rng, 6)],
                };
                finite_diff_check(&mut net, &x, &loss, 1e-6).unwrap()
            })
            .collect(),
    )
}

fn check_critic_gradients() -> Outcome {
    grad_outcome(
        (0..10)
            .map(|seed| {
                let mut rng = seeded(100 + seed);
                let mut cfg = MlpConfig::new(5, vec![9]).hidden(16, 2);
                cfg.head_scale = 1.0;
                let mut net = MlpNetwork::new(cfg, &mut rng).unwrap();
                let x = Tensor::matrix(3, 5, normal_vec(&mut rng, 15));
                let labels = (0..3).map(|_| softmax(&normal_vec(&mut rng, 9))).collect();
                finite_diff_check(&mut net, &x, &CriticObjective { labels }, 1e-6).unwrap()
            })
            .collect(),
    )
}

fn actor_batch(seed: u64, n: usize) -> (Tensor, Tensor, Vec<f64>) {
    let mut rng = seeded(seed);
    let s = Tensor::matrix(n, 3, normal_vec(&mut rng, 3 * n));
    let a = Tensor::matrix(n, 2, (0..2 * n).map(|_| uniform(&mut rng, -0.95, 0.95)).collect());
    let sched = NoiseSchedule::default();
    let sig = (0..n).map(|i| sched.train_level(1 + i % 5, 5)).collect();
    (s, a, sig)
}

/// `Q(s, a) = -‖a‖²`.
fn quadratic_critic(_: &Tensor, a: &Tensor) -> d2ac::Result<QEstimate> {
    let q = (0..a.rows()).map(|r| -a.row(r).iter().map(|v| v * v).sum::<f64>()).collect();
    let g = Tensor::matrix(a.rows(), a.cols(), a.data().iter().map(|v| -2.0 * v).collect());
    Ok(QEstimate { q, action_grad: g })
}

fn check_actor_gradients() -> Outcome {
    grad_outcome(
        (0..10)
            .map(|seed| {
                let mut d = Denoiser::new(3, 2, 16, 2, 1.0, &mut seeded(10 + seed)).unwrap();
                let (s, a, sig) = actor_batch(50 + seed, 4);
                let w = vec![1.0, 0.5, 2.0, 1.0];
                let batch = PolicyBatch { states: &s, actions: &a, sigmas: &sig, weights: &w };
                let (obj, pass) = prepare_policy_objective(&d, 0.2, batch, &mut quadratic_critic, &mut seeded(seed)).unwrap();
                let (x, _) = d.net_input(&s, &pass.noisy, &sig).unwrap();
                finite_diff_check(d.net_mut(), &x, &obj, 1e-6).unwrap()
            })
            .collect(),
    )
}

fn check_regression_gradients() -> Outcome {
    let sched = NoiseSchedule::default();
    grad_outcome(
        (0..10)
            .map(|seed| {
                let mut d = Denoiser::new(3, 2, 16, 2, 1.0, &mut seeded(30 + seed)).unwrap();
                let (s, a, _) = actor_batch(70 + seed, 5);
                let q = normal_vec(&mut seeded(seed), 5);
                let (obj, pass) = prepare_regression_objective(&d, &s, &a, &q, 1.0, &sched, 5, &mut seeded(seed)).unwrap();
                let sig: Vec<f64> = pass.coeffs.iter().map(|c| c.noise.exp()).collect();
                let (x, _) = d.net_input(&s, &obj.noisy, &sig).unwrap();
                finite_diff_check(d.net_mut(), &x, &obj, 1e-6).unwrap()
            })
            .collect(),
    )
}

fn check_log_prob_equivalence() -> Outcome {
    let mut rng = seeded(15);
    let mut worst = 0.0f64;
    for i in 0..=RANDOM_CASES {
        let u = -5.0 + 10.0 * i as f64 / RANDOM_CASES as f64;
        let mu = uniform(&mut rng, -2.0, 2.0);
        let sigma = uniform(&mut rng, 0.05, 2.0);
        let z = (u - mu) / sigma;
        let direct = -0.5 * z * z - sigma.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln() - (1.0 - u.tanh().powi(2)).ln();
        worst = worst.max((tanh_log_prob(&[u], &[mu], &[sigma]) - direct).abs());
    }
    (worst < LOG_PROB_TOLERANCE, format!("max deviation from the direct formula {worst:.2e} on |u| ≤ 5"))
}

/// `σ(η)` in double-double arithmetic.
pub fn sigma_oracle(schedule: &NoiseSchedule, eta: f64) -> f64 {
    let dd = DoubleDouble::new;
    let root = |v: f64| (dd(v).ln() / dd(schedule.rho)).exp();
    let (lo, hi) = (root(schedule.sigma_min), root(schedule.sigma_max));
    let base = lo + dd(eta) * (hi - lo);
    (base.ln() * dd(schedule.rho)).exp().to_f64()
}

fn check_schedule() -> Outcome {
    let s = NoiseSchedule::default();
    let ends = s.sigma_at(0.0) == s.sigma_min
        && s.sigma_at(1.0) == s.sigma_max
        && s.train_level(1, 5) == s.sigma_min
        && s.train_level(5, 5) == s.sigma_max
        && s.sampling_ladder().last() == Some(&s.sigma_max);
    let oracle = sigma_oracle(&s, 0.5);
    let mid = s.sigma_at(0.5);
    let ok = ends && (mid - oracle).abs() < 1e-3 && (oracle - 0.402).abs() < 1e-3;
    (ok, format!("endpoints exact: {ends}; σ(0.5) = {mid:.6}, oracle {oracle:.15}"))
}

fn check_one_step_bound() -> Outcome {
    let report = one_step_bound(&OneStepOracle::default());
    let steps: Vec<String> = report
        .cases
        .iter()
        .filter(|c| c.far_enough)
        .flat_map(|c| c.steps.iter().map(move |s| format!("σ̂={} k={} E[Q]={:.5}±{:.5}", c.sigma_hat, s.k, s.mean_q, s.std_err)))
        .collect();
    (report.passed(), format!("clean E[Q]={:.5}±{:.5}; {}", report.clean_mean_q, report.clean_std_err, steps.join(", ")))
}

fn check_polyak() -> Outcome {
    let cfg = MlpConfig::new(2, vec![1]).hidden(4, 1);
    let online = MlpNetwork::new(cfg.clone(), &mut seeded(1)).unwrap();
    let mut target = MlpNetwork::new(cfg, &mut seeded(2)).unwrap();
    let before: Vec<f64> = target.params().iter().flat_map(|p| p.value.data().to_vec()).collect();
    polyak_update(&mut target, &online, 0.995).unwrap();
    let after: Vec<f64> = target.params().iter().flat_map(|p| p.value.data().to_vec()).collect();
    let on: Vec<f64> = online.params().iter().flat_map(|p| p.value.data().to_vec()).collect();
    let worst = before.iter().zip(&after).zip(&on).map(|((b, a), o)| (a - (0.995 * b + 0.005 * o)).abs()).fold(0.0, f64::max);
    (worst < 1e-15, format!("max deviation from 0.995·target + 0.005·online {worst:.1e}"))
}

fn check_relabel_identity() -> Outcome {
    let episode: Vec<Transition> = (0..5)
        .map(|t| Transition {
            state: vec![t as f64],
            action: vec![0.0],
            reward: -1.0,
            next_state: vec![t as f64 + 1.0],
            done: false,
            goal: Some(vec![9.0]),
        })
        .collect();
    let out = her_relabel(&episode, 0, |s| s.to_vec(), |a, g| if a == g { 0.0 } else { -1.0 }, &mut seeded(0));
    (out == episode, "k = 0 returns the episode unchanged".into())
}

fn check_coverage() -> Outcome {
    let mut g = vec![0u64; 100];
    g[..12].iter_mut().for_each(|c| *c = 10);
    g[12..37].iter_mut().for_each(|c| *c = 3);
    let c = coverage_metrics(&g, &[1, 10]);
    (c == vec![0.37, 0.12], format!("visit {} main {}", c[0], c[1]))
}

/// Every check with the library projection.
pub fn run_check() -> CheckReport {
    run_check_with(project_dist)
}

/// Every check, with `project` standing in for the categorical projection in
/// the mass-conservation check.
pub fn run_check_with(project: ProjectFn) -> CheckReport {
    let mut suite = Suite { report: CheckReport::default() };
    suite.run("critic", "projection_mass", || check_projection_mass(project));
    suite.run("critic", "twohot_mean", check_twohot_mean);
    suite.run("critic", "one_hot_equivalence", check_one_hot_equivalence);
    suite.run("critic", "clip_select_min", check_clip_select);
    suite.run("nn", "mlp_gradients", check_mlp_gradients);
    suite.run("critic", "cross_entropy_gradients", check_critic_gradients);
    suite.run("actor", "policy_gradients", check_actor_gradients);
    suite.run("actor", "regression_gradients", check_regression_gradients);
    suite.run("actor", "log_prob_equivalence", check_log_prob_equivalence);
    suite.run("actor", "schedule", check_schedule);
    suite.run("actor", "one_step_bound", check_one_step_bound);
    suite.run("engine", "polyak", check_polyak);
    suite.run("engine", "relabel_identity", check_relabel_identity);
    suite.run("engine", "coverage", check_coverage);
    suite.report
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oracle_midpoint() {
        let v = sigma_oracle(&NoiseSchedule::default(), 0.5);
        assert!((v - 0.402_099_239_590_896_076).abs() < 1e-15);
    }

    #[test]
    fn report_lists_timings() {
        let mut suite = Suite { report: CheckReport::default() };
        suite.run("m", "ok", || (true, String::new()));
        suite.run("m", "bad", || (false, "x".into()));
        suite.run("m", "boom", || panic!("nope"));
        let r = suite.report;
        assert!(!r.passed());
        assert_eq!(r.failures().len(), 2);
        assert_eq!(r.get("m", "boom").unwrap().detail, "panicked");
        assert!(r.to_string().contains("FAIL"));
    }
}
