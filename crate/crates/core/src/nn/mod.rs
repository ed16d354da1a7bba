//! Minimal dense-network substrate.
//!
//! All arithmetic is `f64`. Batched activations are row-major `[batch, features]`
//! tensors; matrix products go through `matrixmultiply`.

mod adamw;
mod checkpoint;
mod embedding;
mod gradcheck;
mod layer_norm;
mod linear;
mod mlp;
mod precise;
mod reference;
mod tensor;

pub use adamw::{adamw_step, AdamW};
pub use checkpoint::Checkpoint;
pub use embedding::positional_embedding;
pub use gradcheck::{finite_diff_check, relative_error, Objective, Quadratic};
pub use layer_norm::{layer_norm, layer_norm_backward, LayerNorm, LayerNormCache, LN_EPS};
pub use linear::Linear;
pub use mlp::{MlpCache, MlpConfig, MlpNetwork};
pub use precise::{DoubleDouble, Real};
pub use reference::{reference_forward, Rows};
pub use tensor::{Parameter, Tensor};
