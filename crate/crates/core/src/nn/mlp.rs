use std::sync::atomic::{AtomicU64, Ordering};

use super::layer_norm::{layer_norm, layer_norm_backward, LayerNorm, LayerNormCache};
use super::linear::Linear;
use super::tensor::{Parameter, Tensor};
use crate::rng::Rng;
use crate::{Error, Result};

static NEXT_NET_ID: AtomicU64 = AtomicU64::new(1);

fn next_id() -> u64 {
    NEXT_NET_ID.fetch_add(1, Ordering::Relaxed)
}

#[derive(Clone, Debug, PartialEq)]
pub struct MlpConfig {
    pub input_dim: usize,
    pub hidden_units: usize,
    pub hidden_layers: usize,
    pub head_dims: Vec<usize>,
    /// Insert LayerNorm between each hidden Linear and its ReLU.
    pub layer_norm: bool,
    /// Multiplier on the initial head weights.
    pub head_scale: f64,
}

impl MlpConfig {
    pub fn new(input_dim: usize, head_dims: Vec<usize>) -> Self {
        MlpConfig {
            input_dim,
            hidden_units: 256,
            hidden_layers: 2,
            head_dims,
            layer_norm: true,
            head_scale: 0.01,
        }
    }

    pub fn hidden(mut self, units: usize, layers: usize) -> Self {
        self.hidden_units = units;
        self.hidden_layers = layers;
        self
    }
}

#[derive(Clone, Debug)]
struct Block {
    linear: Linear,
    norm: Option<LayerNorm>,
}

/// `(Linear → LayerNorm → ReLU)* → heads`.
#[derive(Debug)]
pub struct MlpNetwork {
    config: MlpConfig,
    blocks: Vec<Block>,
    heads: Vec<Linear>,
    id: u64,
    version: u64,
}

impl Clone for MlpNetwork {
    fn clone(&self) -> Self {
        MlpNetwork {
            config: self.config.clone(),
            blocks: self.blocks.clone(),
            heads: self.heads.clone(),
            id: next_id(),
            version: 0,
        }
    }
}

/// Activations recorded by [`MlpNetwork::forward`] for the matching backward pass.
#[derive(Clone, Debug)]
pub struct MlpCache {
    net_id: u64,
    version: u64,
    /// Input of every block, then the last hidden activation.
    inputs: Vec<Tensor>,
    norms: Vec<Option<LayerNormCache>>,
    /// Pre-ReLU activations.
    pre_act: Vec<Tensor>,
}

impl MlpNetwork {
    pub fn new(config: MlpConfig, rng: &mut Rng) -> Result<Self> {
        if config.input_dim == 0 || config.head_dims.is_empty() || config.head_dims.contains(&0) {
            return Err(Error::Config(format!("degenerate network dims: {config:?}")));
        }
        if config.hidden_layers > 0 && config.hidden_units == 0 {
            return Err(Error::Config("hidden_units must be positive".into()));
        }
        let mut blocks = Vec::with_capacity(config.hidden_layers);
        let mut width = config.input_dim;
        for i in 0..config.hidden_layers {
            let name = format!("block{i}");
            blocks.push(Block {
                linear: Linear::new(&name, width, config.hidden_units, 1.0, rng),
                norm: config.layer_norm.then(|| LayerNorm::new(&format!("{name}.norm"), config.hidden_units)),
            });
            width = config.hidden_units;
        }
        let heads = config
            .head_dims
            .iter()
            .enumerate()
            .map(|(i, &d)| Linear::new(&format!("head{i}"), width, d, config.head_scale, rng))
            .collect();
        Ok(MlpNetwork { config, blocks, heads, id: next_id(), version: 0 })
    }

    pub fn config(&self) -> &MlpConfig {
        &self.config
    }

    pub fn input_dim(&self) -> usize {
        self.config.input_dim
    }

    pub fn params(&self) -> Vec<&Parameter> {
        let mut out = Vec::new();
        for b in &self.blocks {
            out.push(&b.linear.weight);
            out.push(&b.linear.bias);
            if let Some(n) = &b.norm {
                out.push(&n.gain);
                out.push(&n.bias);
            }
        }
        for h in &self.heads {
            out.push(&h.weight);
            out.push(&h.bias);
        }
        out
    }

    /// Mutable parameter access. Invalidates outstanding caches.
    pub fn params_mut(&mut self) -> Vec<&mut Parameter> {
        self.version += 1;
        let mut out = Vec::new();
        for b in &mut self.blocks {
            out.push(&mut b.linear.weight);
            out.push(&mut b.linear.bias);
            if let Some(n) = &mut b.norm {
                out.push(&mut n.gain);
                out.push(&mut n.bias);
            }
        }
        for h in &mut self.heads {
            out.push(&mut h.weight);
            out.push(&mut h.bias);
        }
        out
    }

    pub fn num_params(&self) -> usize {
        self.params().iter().map(|p| p.value.len()).sum()
    }

    /// Clears gradients. Values are untouched, so caches stay valid.
    pub fn zero_grad(&mut self) {
        let version = self.version;
        for p in self.params_mut() {
            p.zero_grad();
        }
        self.version = version;
    }

    /// Copies parameter values from `other`, which must share the architecture.
    pub fn copy_from(&mut self, other: &MlpNetwork) -> Result<()> {
        if self.config != other.config {
            return Err(Error::dim("copy between different architectures"));
        }
        for (dst, src) in self.params_mut().into_iter().zip(other.params()) {
            dst.value.data_mut().copy_from_slice(src.value.data());
        }
        Ok(())
    }

    /// Batched forward pass over `[batch, input_dim]` rows.
    pub fn forward(&self, input: &Tensor) -> Result<(Vec<Tensor>, MlpCache)> {
        if input.cols() != self.config.input_dim || input.shape().len() != 2 {
            return Err(Error::dim(format!(
                "network expects [batch, {}], got {:?}",
                self.config.input_dim,
                input.shape()
            )));
        }
        let mut inputs = Vec::with_capacity(self.blocks.len() + 1);
        let mut norms = Vec::with_capacity(self.blocks.len());
        let mut pre_act = Vec::with_capacity(self.blocks.len());
        let mut x = input.clone();
        for b in &self.blocks {
            let z = b.linear.forward(&x);
            let (z, nc) = match &b.norm {
                Some(n) => {
                    let (y, c) = layer_norm(&z, n.gain.value.data(), n.bias.value.data());
                    (y, Some(c))
                }
                None => (z, None),
            };
            let mut h = z.clone();
            h.data_mut().iter_mut().for_each(|v| *v = v.max(0.0));
            inputs.push(x);
            norms.push(nc);
            pre_act.push(z);
            x = h;
        }
        let outputs = self.heads.iter().map(|h| h.forward(&x)).collect();
        inputs.push(x);
        Ok((outputs, MlpCache { net_id: self.id, version: self.version, inputs, norms, pre_act }))
    }

    /// Forward pass without keeping a cache.
    pub fn predict(&self, input: &Tensor) -> Result<Vec<Tensor>> {
        self.forward(input).map(|(o, _)| o)
    }

    fn check_cache(&self, cache: &MlpCache, head_grads: &[Tensor]) -> Result<()> {
        if cache.net_id != self.id || cache.version != self.version {
            return Err(Error::Usage("activation cache does not belong to this network state".into()));
        }
        if head_grads.len() != self.heads.len() {
            return Err(Error::dim(format!("{} head gradients for {} heads", head_grads.len(), self.heads.len())));
        }
        let batch = cache.inputs[0].rows();
        for (g, h) in head_grads.iter().zip(&self.heads) {
            if g.rows() != batch || g.cols() != h.output_dim() {
                return Err(Error::dim(format!(
                    "head gradient {:?}, expected [{batch}, {}]",
                    g.shape(),
                    h.output_dim()
                )));
            }
        }
        Ok(())
    }

    fn backward_impl(&self, cache: &MlpCache, head_grads: &[Tensor], want_params: bool) -> (Tensor, Vec<Tensor>) {
        let last = cache.inputs.last().expect("cache has at least the input");
        let mut grads: Vec<Tensor> = Vec::new();
        let mut head_param_grads = Vec::new();
        let mut dh = Tensor::zeros(&[last.rows(), last.cols()]);
        for (head, g) in self.heads.iter().zip(head_grads) {
            let (dx, pg) = head.backward(last, g, want_params);
            dh.add_assign(&dx);
            if let Some((dw, db)) = pg {
                head_param_grads.push(dw);
                head_param_grads.push(db);
            }
        }
        let mut block_grads: Vec<Vec<Tensor>> = Vec::with_capacity(self.blocks.len());
        for (i, b) in self.blocks.iter().enumerate().rev() {
            // ReLU
            let mut dz = dh;
            for (d, z) in dz.data_mut().iter_mut().zip(cache.pre_act[i].data()) {
                if *z <= 0.0 {
                    *d = 0.0;
                }
            }
            let mut norm_grads = None;
            if let (Some(n), Some(nc)) = (&b.norm, &cache.norms[i]) {
                let (dx, dg, db) = layer_norm_backward(nc, n.gain.value.data(), &dz);
                dz = dx;
                norm_grads = Some((dg, db));
            }
            let (dx, pg) = b.linear.backward(&cache.inputs[i], &dz, want_params);
            if let Some((dw, db)) = pg {
                let mut g = vec![dw, db];
                if let Some((dg, dnb)) = norm_grads {
                    let d = dg.len();
                    g.push(Tensor::matrix(1, d, dg));
                    g.push(Tensor::matrix(1, d, dnb));
                }
                block_grads.push(g);
            }
            dh = dx;
        }
        if want_params {
            for g in block_grads.into_iter().rev() {
                grads.extend(g);
            }
            grads.extend(head_param_grads);
        }
        (dh, grads)
    }

    /// Accumulates parameter gradients and returns the input gradient.
    pub fn backward(&mut self, cache: &MlpCache, head_grads: &[Tensor]) -> Result<Tensor> {
        self.check_cache(cache, head_grads)?;
        let (dx, grads) = self.backward_impl(cache, head_grads, true);
        // bypass params_mut so the version (and the caller's cache) stays valid
        let mut i = 0;
        let mut add = |p: &mut Parameter| {
            p.grad.add_assign(&grads[i]);
            i += 1;
        };
        for b in &mut self.blocks {
            add(&mut b.linear.weight);
            add(&mut b.linear.bias);
            if let Some(n) = &mut b.norm {
                add(&mut n.gain);
                add(&mut n.bias);
            }
        }
        for h in &mut self.heads {
            add(&mut h.weight);
            add(&mut h.bias);
        }
        Ok(dx)
    }

    /// Gradient with respect to the input only; parameter gradients are untouched.
    pub fn input_grad(&self, cache: &MlpCache, head_grads: &[Tensor]) -> Result<Tensor> {
        self.check_cache(cache, head_grads)?;
        Ok(self.backward_impl(cache, head_grads, false).0)
    }
}
