use super::agent::Agent;
use crate::env::Environment;
use crate::nn::Tensor;
use crate::rng::Rng;
use crate::{Error, Result};
use rand::RngCore;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EvalMetrics {
    pub episodes: usize,
    pub mean_return: f64,
    /// Fraction of episodes that reached the goal at least once.
    pub success_rate: f64,
    /// Fraction of episodes never caught by a predator.
    pub survival_rate: f64,
}

/// Agent input for an environment's current observation.
pub fn agent_input(env: &dyn Environment, obs: &[f64]) -> Vec<f64> {
    let mut v = obs.to_vec();
    if let Some(g) = env.goal() {
        v.extend(g);
    }
    v
}

/// Runs `n_episodes` episodes in lockstep with mean-action sampling.
///
/// Reset seeds are drawn from `rng`, so a fixed seed reproduces the metrics
/// exactly. Neither the agent nor any buffer is touched.
pub fn evaluate<F>(agent: &Agent, make_env: F, n_episodes: usize, rng: &mut Rng) -> Result<EvalMetrics>
where
    F: Fn() -> Result<Box<dyn Environment>>,
{
    if n_episodes == 0 {
        return Err(Error::Usage("evaluation needs at least one episode".into()));
    }
    let mut envs = (0..n_episodes).map(|_| make_env()).collect::<Result<Vec<_>>>()?;
    let mut obs: Vec<Vec<f64>> = envs.iter_mut().map(|e| e.reset(rng.next_u64())).collect();
    let mut returns = vec![0.0; n_episodes];
    let mut success = vec![false; n_episodes];
    let mut caught = vec![false; n_episodes];
    let mut live: Vec<usize> = (0..n_episodes).collect();
    while !live.is_empty() {
        let inputs: Vec<Vec<f64>> = live.iter().map(|&i| agent_input(envs[i].as_ref(), &obs[i])).collect();
        let actions = agent.act(&Tensor::from_rows(&inputs)?, false, rng)?;
        let mut still = Vec::with_capacity(live.len());
        for (r, &i) in live.iter().enumerate() {
            let step = envs[i].step(actions.row(r));
            returns[i] += step.reward;
            success[i] |= step.info.success;
            caught[i] |= step.info.caught;
            obs[i] = step.obs.clone();
            if !step.done() {
                still.push(i);
            }
        }
        live = still;
    }
    let n = n_episodes as f64;
    Ok(EvalMetrics {
        episodes: n_episodes,
        mean_return: returns.iter().sum::<f64>() / n,
        success_rate: success.iter().filter(|&&s| s).count() as f64 / n,
        survival_rate: caught.iter().filter(|&&c| !c).count() as f64 / n,
    })
}
