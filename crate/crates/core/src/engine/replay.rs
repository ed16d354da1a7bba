use crate::nn::Tensor;
use crate::rng::Rng;
use crate::{Error, Result};
use rand::Rng as _;

#[derive(Clone, Debug, PartialEq)]
pub struct Transition {
    pub state: Vec<f64>,
    pub action: Vec<f64>,
    pub reward: f64,
    pub next_state: Vec<f64>,
    /// The task ended the episode; bootstrapping stops here.
    pub done: bool,
    pub goal: Option<Vec<f64>>,
}

impl Transition {
    /// Agent input: the state followed by the goal, if any.
    pub fn input(&self, next: bool) -> Vec<f64> {
        let mut v = if next { self.next_state.clone() } else { self.state.clone() };
        if let Some(g) = &self.goal {
            v.extend_from_slice(g);
        }
        v
    }
}

/// A sampled minibatch in matrix form.
#[derive(Clone, Debug)]
pub struct Batch {
    pub states: Tensor,
    pub actions: Tensor,
    pub rewards: Vec<f64>,
    pub next_states: Tensor,
    pub dones: Vec<bool>,
}

/// Fixed-capacity ring of transitions with uniform sampling.
#[derive(Clone, Debug)]
pub struct ReplayBuffer {
    capacity: usize,
    items: Vec<Transition>,
    cursor: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::Config("replay capacity must be positive".into()));
        }
        Ok(ReplayBuffer { capacity, items: Vec::new(), cursor: 0 })
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn append(&mut self, t: Transition) {
        if self.items.len() < self.capacity {
            self.items.push(t);
        } else {
            self.items[self.cursor] = t;
        }
        self.cursor = (self.cursor + 1) % self.capacity;
    }

    pub fn get(&self, i: usize) -> &Transition {
        &self.items[i]
    }

    /// Indices drawn uniformly with replacement.
    pub fn sample_indices(&self, n: usize, rng: &mut Rng) -> Result<Vec<usize>> {
        if self.items.is_empty() {
            return Err(Error::Usage("cannot sample from an empty replay buffer".into()));
        }
        Ok((0..n).map(|_| rng.random_range(0..self.items.len())).collect())
    }

    pub fn sample(&self, n: usize, rng: &mut Rng) -> Result<Vec<&Transition>> {
        Ok(self.sample_indices(n, rng)?.into_iter().map(|i| &self.items[i]).collect())
    }

    pub fn sample_batch(&self, n: usize, rng: &mut Rng) -> Result<Batch> {
        let picked = self.sample(n, rng)?;
        let width = picked[0].input(false).len();
        let adim = picked[0].action.len();
        let mut s = Vec::with_capacity(n * width);
        let mut s2 = Vec::with_capacity(n * width);
        let mut a = Vec::with_capacity(n * adim);
        for t in &picked {
            s.extend(t.input(false));
            s2.extend(t.input(true));
            a.extend_from_slice(&t.action);
        }
        Ok(Batch {
            states: Tensor::matrix(n, width, s),
            actions: Tensor::matrix(n, adim, a),
            rewards: picked.iter().map(|t| t.reward).collect(),
            next_states: Tensor::matrix(n, width, s2),
            dones: picked.iter().map(|t| t.done).collect(),
        })
    }
}
