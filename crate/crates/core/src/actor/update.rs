use super::denoiser::{Denoiser, DenoiserPass};
use super::objective::{ActorObjective, Pull, RegressionObjective};
use super::sample::{squash, ACTION_BOUND};
use super::schedule::{pg_weight_between, NoiseSchedule};
use super::temperature::Temperature;
use crate::critic::QEstimate;
use crate::nn::{AdamW, Objective, Rows, Tensor};
use crate::rng::{normal, Rng};
use crate::{Error, Result};
use rand::Rng as _;

#[derive(Clone, Debug)]
pub struct ActorOptimizers {
    pub actor: AdamW,
    pub temperature: AdamW,
}

/// Replay or freshly sampled actions with the noise level and loss weight of each row.
#[derive(Clone, Copy, Debug)]
pub struct PolicyBatch<'a> {
    pub states: &'a Tensor,
    pub actions: &'a Tensor,
    pub sigmas: &'a [f64],
    pub weights: &'a [f64],
}

#[derive(Clone, Copy, Debug, Default)]
pub struct PolicyStats {
    pub actor_loss: f64,
    pub alpha_loss: f64,
    pub alpha: f64,
    pub log_prob: f64,
}

pub fn unsquash(a: f64) -> f64 {
    a.clamp(-ACTION_BOUND, ACTION_BOUND).atanh()
}

pub(crate) fn rows_of(t: &Tensor) -> Rows<f64> {
    (0..t.rows()).map(|r| t.row(r).to_vec()).collect()
}

/// `dQ/dx` at `x` for `Q(s, tanh x)`, checked for finiteness.
pub(crate) fn value_gradient<C>(critic: &mut C, states: &Tensor, x: &Tensor) -> Result<(Vec<f64>, Tensor)>
where
    C: FnMut(&Tensor, &Tensor) -> Result<QEstimate>,
{
    let actions = Tensor::matrix(x.rows(), x.cols(), x.data().iter().map(|v| squash(*v)).collect());
    let est = critic(states, &actions)?;
    if !est.action_grad.is_finite() {
        return Err(Error::Training { param: "critic action gradient".into(), msg: "non-finite value gradient".into() });
    }
    let mut g = est.action_grad;
    for (gv, xv) in g.data_mut().iter_mut().zip(x.data()) {
        let t = xv.tanh();
        *gv *= 1.0 - t * t;
    }
    Ok((est.q, g))
}

/// Builds the value-gradient actor objective for one batch.
///
/// Noises the replay actions in pre-squash space, runs the denoiser, draws
/// the reparameterized sample `x`, and freezes `x + ∇ₓQ(s, tanh x)` as the
/// regression target.
pub fn prepare_policy_objective<C>(denoiser: &Denoiser, alpha: f64, batch: PolicyBatch<'_>, critic: &mut C, rng: &mut Rng) -> Result<(ActorObjective, DenoiserPass)>
where
    C: FnMut(&Tensor, &Tensor) -> Result<QEstimate>,
{
    let (rows, dim) = (batch.actions.rows(), batch.actions.cols());
    let mut noisy = Tensor::zeros(&[rows, dim]);
    for r in 0..rows {
        for j in 0..dim {
            noisy.row_mut(r)[j] = unsquash(batch.actions.row(r)[j]) + batch.sigmas[r] * normal(rng);
        }
    }
    let pass = denoiser.forward(batch.states, &noisy, batch.sigmas)?;
    let eps = Tensor::matrix(rows, dim, (0..rows * dim).map(|_| normal(rng)).collect());
    let mut objective = ActorObjective {
        skip: pass.coeffs.iter().map(|c| c.skip).collect(),
        out: pass.coeffs.iter().map(|c| c.out).collect(),
        noisy,
        eps,
        pull: Pull::Regress(Tensor::zeros(&[rows, dim])),
        alpha,
        weights: batch.weights.to_vec(),
    };
    let (_, _, x) = objective.sample(&pass.outputs);
    let (_, g) = value_gradient(critic, batch.states, &x)?;
    let mut target = x;
    target.add_assign(&g);
    objective.pull = Pull::Regress(target);
    Ok((objective, pass))
}

/// One actor step and one temperature step on a batch.
pub fn policy_update<C>(
    denoiser: &mut Denoiser,
    temperature: &mut Temperature,
    batch: PolicyBatch<'_>,
    mut critic: C,
    optimizers: &ActorOptimizers,
    rng: &mut Rng,
) -> Result<PolicyStats>
where
    C: FnMut(&Tensor, &Tensor) -> Result<QEstimate>,
{
    let alpha = temperature.alpha();
    let (objective, pass) = prepare_policy_objective(denoiser, alpha, batch, &mut critic, rng)?;
    let actor_loss = objective.value(&[rows_of(&pass.outputs[0]), rows_of(&pass.outputs[1])]);
    let log_probs = objective.log_probs(&pass.outputs);
    let log_prob = log_probs.iter().sum::<f64>() / log_probs.len() as f64;
    if !actor_loss.is_finite() {
        return Err(Error::Training { param: "actor".into(), msg: format!("non-finite actor loss {actor_loss}") });
    }
    let grads = objective.output_grad(&pass.outputs);
    denoiser.net_mut().zero_grad();
    denoiser.backward_heads(&pass, &grads)?;
    optimizers.actor.step(&mut denoiser.net_mut().params_mut())?;
    let alpha_loss = temperature.update(log_prob, &optimizers.temperature)?;
    Ok(PolicyStats { actor_loss, alpha_loss, alpha: temperature.alpha(), log_prob })
}

/// Builds the return-weighted denoising objective: each row draws a level
/// `k ∈ 1…K` on the `K + 1` level ladder and is weighted by
/// `λ(k)·exp((Q - max Q)/α_pg)`.
pub fn prepare_regression_objective(
    denoiser: &Denoiser,
    states: &Tensor,
    actions: &Tensor,
    q: &[f64],
    temperature: f64,
    schedule: &NoiseSchedule,
    levels: usize,
    rng: &mut Rng,
) -> Result<(RegressionObjective, DenoiserPass)> {
    if !(temperature > 0.0) {
        return Err(Error::Config(format!("return-weight temperature must be positive, got {temperature}")));
    }
    let (rows, dim) = (actions.rows(), actions.cols());
    let ladder = schedule.regression_ladder(levels);
    let q_max = q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sigmas = Vec::with_capacity(rows);
    let mut weights = Vec::with_capacity(rows);
    for &qv in q {
        let k = rng.random_range(1..=levels);
        sigmas.push(ladder[k]);
        weights.push(pg_weight_between(ladder[k - 1], ladder[k], levels) * ((qv - q_max) / temperature).exp());
    }
    let clean = Tensor::matrix(rows, dim, actions.data().iter().map(|a| unsquash(*a)).collect());
    let mut noisy = clean.clone();
    for r in 0..rows {
        for v in noisy.row_mut(r) {
            *v += sigmas[r] * normal(rng);
        }
    }
    let pass = denoiser.forward(states, &noisy, &sigmas)?;
    let objective = RegressionObjective {
        skip: pass.coeffs.iter().map(|c| c.skip).collect(),
        out: pass.coeffs.iter().map(|c| c.out).collect(),
        noisy,
        clean,
        weights,
    };
    Ok((objective, pass))
}

/// One step of the return-weighted denoising comparator. Returns the loss.
#[allow(clippy::too_many_arguments)]
pub fn pg_policy_update(
    denoiser: &mut Denoiser,
    states: &Tensor,
    actions: &Tensor,
    q: &[f64],
    temperature: f64,
    schedule: &NoiseSchedule,
    levels: usize,
    optimizer: &AdamW,
    rng: &mut Rng,
) -> Result<f64> {
    let (objective, pass) = prepare_regression_objective(denoiser, states, actions, q, temperature, schedule, levels, rng)?;
    let loss = objective.value(&[rows_of(&pass.outputs[0])]);
    if !loss.is_finite() {
        return Err(Error::Training { param: "actor".into(), msg: format!("non-finite regression loss {loss}") });
    }
    let grads = objective.output_grad(&pass.outputs);
    denoiser.net_mut().zero_grad();
    denoiser.backward_heads(&pass, &grads)?;
    optimizer.step(&mut denoiser.net_mut().params_mut())?;
    Ok(loss)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::actor::{sample_actions, SampleMode};
    use crate::nn::finite_diff_check;
    use crate::rng::{normal_vec, seeded, uniform};

    fn denoiser(seed: u64) -> Denoiser {
        Denoiser::new(3, 2, 16, 2, 1.0, &mut seeded(seed)).unwrap()
    }

    fn batch_data(seed: u64, n: usize) -> (Tensor, Tensor, Vec<f64>) {
        let mut rng = seeded(seed);
        let s = Tensor::matrix(n, 3, normal_vec(&mut rng, 3 * n));
        let a = Tensor::matrix(n, 2, (0..2 * n).map(|_| uniform(&mut rng, -0.95, 0.95)).collect());
        let sched = NoiseSchedule::default();
        let sig = (0..n).map(|i| sched.train_level(1 + i % 5, 5)).collect();
        (s, a, sig)
    }

    /// `Q(s, a) = -‖a‖²`.
    fn quadratic_critic(_: &Tensor, a: &Tensor) -> Result<QEstimate> {
        let q = (0..a.rows()).map(|r| -a.row(r).iter().map(|v| v * v).sum::<f64>()).collect();
        let g = Tensor::matrix(a.rows(), a.cols(), a.data().iter().map(|v| -2.0 * v).collect());
        Ok(QEstimate { q, action_grad: g })
    }

    fn flat_critic(_: &Tensor, a: &Tensor) -> Result<QEstimate> {
        Ok(QEstimate { q: vec![0.0; a.rows()], action_grad: Tensor::zeros(&[a.rows(), a.cols()]) })
    }

    #[test]
    fn flat_critic_and_zero_temperature_give_no_gradient() {
        let mut d = denoiser(1);
        let (s, a, sig) = batch_data(2, 6);
        let w = vec![1.0; 6];
        let batch = PolicyBatch { states: &s, actions: &a, sigmas: &sig, weights: &w };
        let (obj, pass) = prepare_policy_objective(&d, 0.0, batch, &mut flat_critic, &mut seeded(3)).unwrap();
        let grads = obj.output_grad(&pass.outputs);
        assert!(grads.iter().all(|g| g.data().iter().all(|v| *v == 0.0)));
        assert_eq!(obj.value(&[rows_of(&pass.outputs[0]), rows_of(&pass.outputs[1])]), 0.0);
        d.backward_heads(&pass, &grads).unwrap();
        assert!(d.net().params().iter().all(|p| p.grad.data().iter().all(|v| *v == 0.0)));
    }

    #[test]
    fn actor_loss_gradient_matches_extended_precision_differences() {
        for seed in 0..20 {
            let mut d = denoiser(10 + seed);
            let (s, a, sig) = batch_data(50 + seed, 4);
            let w = vec![1.0, 0.5, 2.0, 1.0];
            let batch = PolicyBatch { states: &s, actions: &a, sigmas: &sig, weights: &w };
            let (obj, pass) = prepare_policy_objective(&d, 0.2, batch, &mut quadratic_critic, &mut seeded(seed)).unwrap();
            let (x, _) = d.net_input(&s, &pass.noisy, &sig).unwrap();
            let err = finite_diff_check(d.net_mut(), &x, &obj, 1e-6).unwrap();
            assert!(err < 1e-6, "seed {seed}: {err}");
        }
    }

    #[test]
    fn regression_gradient_matches_extended_precision_differences() {
        let sched = NoiseSchedule::default();
        for seed in 0..20 {
            let mut d = denoiser(30 + seed);
            let (s, a, _) = batch_data(70 + seed, 5);
            let q = normal_vec(&mut seeded(seed), 5);
            let (obj, pass) = prepare_regression_objective(&d, &s, &a, &q, 1.0, &sched, 5, &mut seeded(seed)).unwrap();
            let sig: Vec<f64> = pass.coeffs.iter().map(|c| c.noise.exp()).collect();
            let (x, _) = d.net_input(&s, &obj.noisy, &sig).unwrap();
            let err = finite_diff_check(d.net_mut(), &x, &obj, 1e-6).unwrap();
            assert!(err < 1e-6, "seed {seed}: {err}");
        }
    }

    #[test]
    fn zero_return_weight_gives_zero_regression_loss() {
        let d = denoiser(4);
        let (s, a, _) = batch_data(5, 3);
        let sched = NoiseSchedule::default();
        let (mut obj, pass) = prepare_regression_objective(&d, &s, &a, &[0.0; 3], 1.0, &sched, 5, &mut seeded(1)).unwrap();
        obj.weights = vec![0.0; 3];
        assert_eq!(obj.value(&[rows_of(&pass.outputs[0])]), 0.0);
        assert!(obj.output_grad(&pass.outputs).iter().all(|g| g.data().iter().all(|v| *v == 0.0)));
        // a denoiser that reproduces the clean action has nothing to fit
        let mut perfect = obj.clone();
        perfect.weights = vec![1.0; 3];
        let f: Vec<f64> = (0..6).map(|i| (perfect.clean.data()[i] - perfect.skip[i / 2] * perfect.noisy.data()[i]) / perfect.out[i / 2]).collect();
        let f = Tensor::matrix(3, 2, f);
        assert!(perfect.value(&[rows_of(&f)]).abs() < 1e-24);
    }

    #[test]
    fn return_weights_survive_large_values() {
        let d = denoiser(4);
        let (s, a, _) = batch_data(5, 3);
        let (obj, _) = prepare_regression_objective(&d, &s, &a, &[1e4, 1e4 - 1.0, -1e4], 1.0, &NoiseSchedule::default(), 2, &mut seeded(2)).unwrap();
        assert!(obj.weights.iter().all(|w| w.is_finite()));
        assert!(obj.weights[2] == 0.0);
    }

    #[test]
    fn quadratic_critic_pulls_actions_toward_zero() {
        let mut d = denoiser(6);
        let mut temp = Temperature::new(1e-3, 0.0, 2).unwrap();
        let opts = ActorOptimizers { actor: AdamW::new(1e-3, 1e-4), temperature: AdamW::new(0.0, 0.0) };
        let state = [0.3, -0.2, 0.5];
        let states = Tensor::matrix(64, 3, state.repeat(64));
        let sched = NoiseSchedule::default();
        let mut rng = seeded(7);
        let spread = |d: &Denoiser| {
            let a = sample_actions(d, &states, &sched, SampleMode::MEAN, &mut seeded(0)).unwrap();
            a.actions.data().iter().map(|v| v * v).sum::<f64>() / 64.0
        };
        let mut history = vec![spread(&d)];
        let mut actions = Tensor::matrix(64, 2, (0..128).map(|i| if i % 2 == 0 { 0.8 } else { -0.6 }).collect());
        for step in 0..500 {
            let sig: Vec<f64> = (0..64).map(|i| sched.train_level(1 + (i + step) % 5, 5)).collect();
            let w = vec![1.0; 64];
            let batch = PolicyBatch { states: &states, actions: &actions, sigmas: &sig, weights: &w };
            policy_update(&mut d, &mut temp, batch, quadratic_critic, &opts, &mut rng).unwrap();
            actions = sample_actions(&d, &states, &sched, SampleMode::STOCHASTIC, &mut rng).unwrap().actions;
            if step % 50 == 49 {
                history.push(spread(&d));
            }
        }
        let n = history.len() as f64;
        let t_mean = (n - 1.0) / 2.0;
        let h_mean = history.iter().sum::<f64>() / n;
        let slope: f64 = history.iter().enumerate().map(|(t, h)| (t as f64 - t_mean) * (h - h_mean)).sum::<f64>();
        let falls = history.windows(2).filter(|w| w[1] < w[0]).count();
        assert!(slope < 0.0, "{history:?}");
        assert!(falls * 10 >= 7 * (history.len() - 1), "{history:?}");
        assert!(history[history.len() - 1] < 0.95 * history[0], "{history:?}");
    }
}
