use super::loss::{log_softmax, softmax};
use super::projection::critic_target;
use super::support::{ReturnDistribution, Support};
use crate::engine::polyak_update;
use crate::nn::{AdamW, MlpConfig, MlpNetwork, Tensor};
use crate::rng::Rng;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CriticKind {
    /// Categorical logits over the support, cross-entropy against projected labels.
    Distributional,
    /// One scalar Q per network, squared TD error.
    Scalar,
}

/// Per-row Q value of the pessimistic critic and its gradient w.r.t. the action.
#[derive(Clone, Debug)]
pub struct QEstimate {
    pub q: Vec<f64>,
    pub action_grad: Tensor,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct CriticStats {
    pub loss: f64,
    pub mean_q: f64,
}

/// One or two online critics over `(state, action)` with frozen target copies.
///
/// With two critics, bootstrap targets come from the lower-mean target
/// network and both online networks regress toward the same label.
#[derive(Clone, Debug)]
pub struct Critics {
    kind: CriticKind,
    support: Support,
    state_dim: usize,
    action_dim: usize,
    online: Vec<MlpNetwork>,
    target: Vec<MlpNetwork>,
}

impl Critics {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        kind: CriticKind,
        double: bool,
        support: Support,
        state_dim: usize,
        action_dim: usize,
        hidden_units: usize,
        hidden_layers: usize,
        rng: &mut Rng,
    ) -> Result<Self> {
        let out = match kind {
            CriticKind::Distributional => support.len(),
            CriticKind::Scalar => 1,
        };
        let cfg = MlpConfig::new(state_dim + action_dim, vec![out]).hidden(hidden_units, hidden_layers);
        let count = if double { 2 } else { 1 };
        let online = (0..count).map(|_| MlpNetwork::new(cfg.clone(), rng)).collect::<Result<Vec<_>>>()?;
        let target = online.clone();
        Ok(Critics { kind, support, state_dim, action_dim, online, target })
    }

    pub fn kind(&self) -> CriticKind {
        self.kind
    }

    pub fn support(&self) -> &Support {
        &self.support
    }

    pub fn is_double(&self) -> bool {
        self.online.len() == 2
    }

    pub fn online(&self) -> &[MlpNetwork] {
        &self.online
    }

    pub fn target(&self) -> &[MlpNetwork] {
        &self.target
    }

    pub fn online_mut(&mut self) -> &mut [MlpNetwork] {
        &mut self.online
    }

    pub fn target_mut(&mut self) -> &mut [MlpNetwork] {
        &mut self.target
    }

    /// Online and target networks, borrowed together.
    pub fn networks_mut(&mut self) -> (&mut [MlpNetwork], &mut [MlpNetwork]) {
        (&mut self.online, &mut self.target)
    }

    pub fn input(&self, states: &Tensor, actions: &Tensor) -> Result<Tensor> {
        if states.cols() != self.state_dim || actions.cols() != self.action_dim || states.rows() != actions.rows() {
            return Err(Error::dim(format!(
                "critic expects [B,{}] states and [B,{}] actions, got {:?} and {:?}",
                self.state_dim,
                self.action_dim,
                states.shape(),
                actions.shape()
            )));
        }
        Ok(Tensor::hcat(&[states, actions]))
    }

    /// Expected Q of one head output, row by row.
    fn means(&self, out: &Tensor) -> Vec<f64> {
        match self.kind {
            CriticKind::Scalar => out.data().to_vec(),
            CriticKind::Distributional => (0..out.rows())
                .map(|r| softmax(out.row(r)).iter().zip(self.support.atoms()).map(|(p, z)| p * z).sum())
                .collect(),
        }
    }

    /// Expected Q of every online critic.
    pub fn q_values(&self, states: &Tensor, actions: &Tensor) -> Result<Vec<Vec<f64>>> {
        let x = self.input(states, actions)?;
        self.online.iter().map(|n| Ok(self.means(&n.predict(&x)?[0]))).collect()
    }

    /// Per-row minimum over online critics together with `dQ/da` of the
    /// critic that attained it.
    pub fn min_q_with_action_grad(&self, states: &Tensor, actions: &Tensor) -> Result<QEstimate> {
        let x = self.input(states, actions)?;
        let rows = x.rows();
        let mut q = vec![f64::INFINITY; rows];
        let mut grad = Tensor::zeros(&[rows, self.action_dim]);
        for net in &self.online {
            let (out, cache) = net.forward(&x)?;
            let logits = &out[0];
            let (means, head_grad) = match self.kind {
                CriticKind::Scalar => (logits.data().to_vec(), Tensor::matrix(rows, 1, vec![1.0; rows])),
                CriticKind::Distributional => {
                    // dQ/dl_k = p_k (z_k - Q)
                    let mut means = Vec::with_capacity(rows);
                    let mut g = Vec::with_capacity(logits.len());
                    for r in 0..rows {
                        let p = softmax(logits.row(r));
                        let m: f64 = p.iter().zip(self.support.atoms()).map(|(p, z)| p * z).sum();
                        g.extend(p.iter().zip(self.support.atoms()).map(|(p, z)| p * (z - m)));
                        means.push(m);
                    }
                    (means, Tensor::matrix(rows, logits.cols(), g))
                }
            };
            let dx = net.input_grad(&cache, &[head_grad])?;
            for r in 0..rows {
                if means[r] < q[r] {
                    q[r] = means[r];
                    grad.row_mut(r).copy_from_slice(&dx.row(r)[self.state_dim..]);
                }
            }
        }
        Ok(QEstimate { q, action_grad: grad })
    }

    /// Bootstrapped distributional labels from the target critics.
    pub fn distributional_labels(
        &self,
        next_states: &Tensor,
        next_actions: &Tensor,
        rewards: &[f64],
        dones: &[bool],
        gamma: f64,
    ) -> Result<Vec<ReturnDistribution>> {
        let x = self.input(next_states, next_actions)?;
        let outs = self.target.iter().map(|n| n.predict(&x).map(|mut o| o.remove(0))).collect::<Result<Vec<_>>>()?;
        let atoms = self.support.atoms();
        (0..x.rows())
            .map(|r| {
                let mut best: Option<(f64, Vec<f64>)> = None;
                for out in &outs {
                    let p = softmax(out.row(r));
                    let m: f64 = p.iter().zip(atoms).map(|(p, z)| p * z).sum();
                    // strict comparison keeps the first critic on ties
                    if best.as_ref().is_none_or(|(bm, _)| m < *bm) {
                        best = Some((m, p));
                    }
                }
                let next = ReturnDistribution { probs: best.unwrap().1 };
                Ok(critic_target(rewards[r], gamma, dones[r], &next, &self.support))
            })
            .collect()
    }

    /// `r + γ(1 - done)·min_i Q̄_i(s', a')` for scalar critics.
    pub fn scalar_targets(&self, next_states: &Tensor, next_actions: &Tensor, rewards: &[f64], dones: &[bool], gamma: f64) -> Result<Vec<f64>> {
        let x = self.input(next_states, next_actions)?;
        let mut next = vec![f64::INFINITY; x.rows()];
        for net in &self.target {
            for (m, q) in next.iter_mut().zip(net.predict(&x)?[0].data()) {
                *m = m.min(*q);
            }
        }
        Ok((0..x.rows()).map(|r| rewards[r] + if dones[r] { 0.0 } else { gamma * next[r] }).collect())
    }

    /// One optimizer step of every online critic toward the bootstrapped targets.
    #[allow(clippy::too_many_arguments)]
    pub fn update(
        &mut self,
        states: &Tensor,
        actions: &Tensor,
        rewards: &[f64],
        next_states: &Tensor,
        next_actions: &Tensor,
        dones: &[bool],
        gamma: f64,
        optimizer: &AdamW,
    ) -> Result<CriticStats> {
        let x = self.input(states, actions)?;
        let rows = x.rows() as f64;
        let mut stats = CriticStats::default();
        match self.kind {
            CriticKind::Distributional => {
                let labels = self.distributional_labels(next_states, next_actions, rewards, dones, gamma)?;
                let labels = labels.into_iter().map(|d| d.probs).collect::<Vec<_>>();
                for net in &mut self.online {
                    let (out, cache) = net.forward(&x)?;
                    let logits = &out[0];
                    let mut g = Vec::with_capacity(logits.len());
                    for (r, label) in labels.iter().enumerate() {
                        for ((l, y), z) in log_softmax(logits.row(r)).into_iter().zip(label).zip(self.support.atoms()) {
                            let p = l.exp();
                            if *y != 0.0 {
                                stats.loss -= y * l / rows;
                            }
                            stats.mean_q += p * z / rows;
                            g.push((p - y) / rows);
                        }
                    }
                    net.zero_grad();
                    net.backward(&cache, &[Tensor::matrix(logits.rows(), logits.cols(), g)])?;
                    optimizer.step(&mut net.params_mut())?;
                }
            }
            CriticKind::Scalar => {
                let y = self.scalar_targets(next_states, next_actions, rewards, dones, gamma)?;
                for net in &mut self.online {
                    let (out, cache) = net.forward(&x)?;
                    let q = out[0].data();
                    stats.loss += q.iter().zip(&y).map(|(q, y)| (q - y).powi(2)).sum::<f64>() / rows;
                    stats.mean_q += q.iter().sum::<f64>() / rows;
                    let g = q.iter().zip(&y).map(|(q, y)| 2.0 * (q - y) / rows).collect();
                    net.zero_grad();
                    net.backward(&cache, &[Tensor::matrix(q.len(), 1, g)])?;
                    optimizer.step(&mut net.params_mut())?;
                }
            }
        }
        stats.mean_q /= self.online.len() as f64;
        if !stats.loss.is_finite() {
            return Err(Error::Training { param: "critic".into(), msg: format!("non-finite critic loss {}", stats.loss) });
        }
        Ok(stats)
    }

    pub fn update_targets(&mut self, tau: f64) -> Result<()> {
        for (t, o) in self.target.iter_mut().zip(&self.online) {
            polyak_update(t, o, tau)?;
        }
        Ok(())
    }
}
