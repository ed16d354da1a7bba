use super::replay::Transition;
use crate::rng::Rng;
use rand::Rng as _;

/// Hindsight relabeling with the "future" strategy.
///
/// Every transition is kept and followed by `k_future` copies whose goal is
/// the achieved goal of a uniformly chosen step at or after it in the same
/// episode. Rewards are recomputed with `reward_fn(achieved, goal)`, and a
/// relabeled copy is terminal exactly when that reward signals success (`0`).
pub fn her_relabel<A, R>(episode: &[Transition], k_future: usize, achieved: A, reward_fn: R, rng: &mut Rng) -> Vec<Transition>
where
    A: Fn(&[f64]) -> Vec<f64>,
    R: Fn(&[f64], &[f64]) -> f64,
{
    let n = episode.len();
    let mut out = Vec::with_capacity(n * (1 + k_future));
    for (t, tr) in episode.iter().enumerate() {
        out.push(tr.clone());
        let reached = achieved(&tr.next_state);
        for _ in 0..k_future {
            let j = rng.random_range(t..n);
            let goal = achieved(&episode[j].next_state);
            let reward = reward_fn(&reached, &goal);
            out.push(Transition { reward, done: reward == 0.0, goal: Some(goal), ..tr.clone() });
        }
    }
    out
}
