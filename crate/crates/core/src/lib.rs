//! D2AC: clipped double categorical critic + EDM diffusion actor.
//!
//! The crate is organised bottom-up:
//!
//! - [`nn`]: dense networks with hand-written backward passes, AdamW, and a
//!   finite-difference gradient oracle.
//! - [`critic`]: return-distribution support, two-hot encoding, projections,
//!   clipped double selection and the cross-entropy critic loss.
//! - [`actor`]: noise schedule, EDM denoiser, diffusion sampling, tanh-squashed
//!   likelihood and the value-gradient policy update.
//! - [`engine`]: replay, hindsight relabeling, the off-policy training loop,
//!   evaluation and coverage metrics.
//! - [`env`]: small continuous-control tasks, including a predator-prey arena.

pub mod actor;
pub mod critic;
pub mod engine;
pub mod env;
mod error;
pub mod nn;
pub mod rng;

pub use error::{Error, Result};
