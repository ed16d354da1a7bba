//! Configuration parsing, training and evaluation runs, numerical
//! self-checks and ablation tables for the `d2ac` binary.

pub mod ablate;
pub mod check;
pub mod config;
pub mod metrics;
pub mod train;

pub use ablate::{run_ablate, AblationTable};
pub use check::{run_check, CheckReport};
pub use config::{parse_config, parse_str, ConfigError, RunConfig, StepPair};
pub use metrics::{read_metrics, MetricsRecord, MetricsWriter};
pub use train::{run_eval, run_train, train_in_memory, TrainOutcome};
