//! Diffusion policy over pre-squash actions, its training losses, and a
//! tanh-Gaussian alternative.

mod denoiser;
mod edm;
mod gaussian;
mod likelihood;
mod objective;
mod one_step;
mod sample;
mod schedule;
mod temperature;
mod update;

pub use denoiser::{noise_embedding_arg, Denoise, Denoiser, DenoiserPass, LOG_SIGMA_MAX, LOG_SIGMA_MIN, NOISE_EMBED_DIM};
pub use edm::{edm_coeffs, EdmCoeffs};
pub use gaussian::GaussianActor;
pub use likelihood::{tanh_log_prob, tanh_log_prob_partials};
pub use objective::{ActorObjective, Pull, RegressionObjective};
pub use one_step::{one_step_bound, BoundCase, BoundReport, OneStepOracle};
pub use sample::{sample_actions, squash, Sample, SampleMode, ACTION_BOUND};
pub use schedule::{pg_weight, pg_weight_between, NoiseSchedule};
pub use temperature::Temperature;
pub use update::{
    pg_policy_update, policy_update, prepare_policy_objective, prepare_regression_objective, unsquash, ActorOptimizers, PolicyBatch,
    PolicyStats,
};
