//! Categorical return distributions and the clipped double critic.

mod loss;
mod networks;
mod projection;
mod support;

pub use loss::{critic_loss_and_grad, log_softmax, softmax, CriticObjective};
pub use networks::{CriticKind, CriticStats, Critics, QEstimate};
pub use projection::{clip_select, critic_target, expected_value, project_dist, project_twohot, two_hot};
pub use support::{ReturnDistribution, Support};
