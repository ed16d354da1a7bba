//! Replay, relabeling, and the off-policy training loop.
mod agent;
mod config;
mod coverage;
mod evaluate;
mod her;
mod polyak;
mod replay;
mod trainer;

pub use agent::{Actor, Agent, StepDiagnostics};
pub use config::{default_support, Ablation, TrainConfig};
pub use coverage::{coverage_metrics, visit_and_main_coverage};
pub use evaluate::{agent_input, evaluate, EvalMetrics};
pub use her::her_relabel;
pub use polyak::polyak_update;
pub use replay::{Batch, ReplayBuffer, Transition};
pub use trainer::{check_finite, episode_seed, Trainer};
