//! `key = value` run configuration.
//!
//! Every [`TrainConfig`] field is a key of the same name, except the two
//! diffusion step counts, which are `k` (denoising steps when acting) and
//! `k_train` (noise levels used on replay actions). Keys not present keep
//! the defaults of the chosen `env`, so the `env` line is resolved first
//! wherever it appears in the file.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use d2ac::engine::{Ablation, TrainConfig};
use d2ac::env::make_env;
use thiserror::Error;

/// Overrides `output_dir` when set.
pub const OUTPUT_DIR_ENV: &str = "D2AC_OUTPUT_DIR";

const DEFAULT_ENV: &str = "point_mass_dense";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },

    #[error("out of range: {msg}")]
    Range { key: String, msg: String },

    #[error("reading {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

/// One `(K_train, K)` pair of the diffusion step grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StepPair {
    pub k_train: usize,
    pub k: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub env: String,
    pub train: TrainConfig,
    pub total_steps: u64,
    /// Environment steps between evaluations.
    pub eval_interval: u64,
    pub eval_episodes: usize,
    /// Evaluations between checkpoints.
    pub checkpoint_every: usize,
    pub output_dir: PathBuf,
    /// Seeds per ablation cell.
    pub seeds: usize,
    /// Ablation cells compared by `ablate`.
    pub cells: Vec<Ablation>,
    /// Extra `(K_train, K)` settings crossed with `cells`; empty runs only the configured pair.
    pub k_grid: Vec<StepPair>,
}

impl RunConfig {
    /// Defaults for `env`.
    pub fn for_env(env: &str) -> Result<Self, ConfigError> {
        let spec = make_env(env).map_err(|e| ConfigError::Range { key: "env".into(), msg: e.to_string() })?.spec().clone();
        Ok(RunConfig {
            env: env.to_string(),
            train: TrainConfig::for_env(&spec),
            total_steps: 100_000,
            eval_interval: 5_000,
            eval_episodes: 20,
            checkpoint_every: 10,
            output_dir: PathBuf::from("runs"),
            seeds: 5,
            cells: vec![Ablation::Full, Ablation::NoCdq, Ablation::ScalarCdq, Ablation::ScalarSingle],
            k_grid: Vec::new(),
        })
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.train.validate().map_err(|e| {
            let msg = match e {
                d2ac::Error::Config(m) => m,
                other => other.to_string(),
            };
            ConfigError::Range { key: "train".into(), msg }
        })?;
        let positive = [
            ("eval_interval", self.eval_interval as usize),
            ("eval_episodes", self.eval_episodes),
            ("checkpoint_every", self.checkpoint_every),
            ("seeds", self.seeds),
        ];
        for (key, v) in positive {
            if v == 0 {
                return Err(ConfigError::Range { key: key.into(), msg: format!("{key} must be positive") });
            }
        }
        if self.cells.is_empty() {
            return Err(ConfigError::Range { key: "cells".into(), msg: "cells needs at least one ablation".into() });
        }
        if self.k_grid.iter().any(|p| p.k == 0 || p.k_train == 0) {
            return Err(ConfigError::Range { key: "k_grid".into(), msg: "k_grid step counts must be at least 1".into() });
        }
        Ok(())
    }

    /// Applies [`OUTPUT_DIR_ENV`] if it is set and non-empty.
    pub fn apply_env_overrides(&mut self) {
        if let Ok(dir) = std::env::var(OUTPUT_DIR_ENV) {
            if !dir.is_empty() {
                self.output_dir = PathBuf::from(dir);
            }
        }
    }

    /// Every key, one per line, in a form [`parse_str`] reads back exactly.
    pub fn to_text(&self) -> String {
        let t = &self.train;
        let mut out = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        put("env", self.env.clone());
        put("total_steps", self.total_steps.to_string());
        put("eval_interval", self.eval_interval.to_string());
        put("eval_episodes", self.eval_episodes.to_string());
        put("checkpoint_every", self.checkpoint_every.to_string());
        put("output_dir", self.output_dir.display().to_string());
        put("seeds", self.seeds.to_string());
        put("cells", self.cells.iter().map(|c| c.name()).collect::<Vec<_>>().join(", "));
        put("k_grid", self.k_grid.iter().map(|p| format!("{}:{}", p.k_train, p.k)).collect::<Vec<_>>().join(", "));
        put("seed", t.seed.to_string());
        put("batch_size", t.batch_size.to_string());
        put("actor_lr", t.actor_lr.to_string());
        put("critic_lr", t.critic_lr.to_string());
        put("alpha_lr", t.alpha_lr.to_string());
        put("weight_decay", t.weight_decay.to_string());
        put("hidden_units", t.hidden_units.to_string());
        put("hidden_layers", t.hidden_layers.to_string());
        put("gamma", t.gamma.to_string());
        put("tau", t.tau.to_string());
        put("alpha_init", t.alpha_init.to_string());
        put("lambda_ent", t.lambda_ent.to_string());
        put("target_update_interval", t.target_update_interval.to_string());
        put("env_steps_per_update", t.env_steps_per_update.to_string());
        put("initial_random_trajectories", t.initial_random_trajectories.to_string());
        put("workers", t.workers.to_string());
        put("buffer_size", t.buffer_size.to_string());
        put("v_min", t.v_min.to_string());
        put("v_max", t.v_max.to_string());
        put("atoms", t.atoms.to_string());
        put("sigma_min", t.sigma_min.to_string());
        put("sigma_max", t.sigma_max.to_string());
        put("sigma_data", t.sigma_data.to_string());
        put("rho", t.rho.to_string());
        put("k", t.steps.to_string());
        put("k_train", t.train_steps.to_string());
        put("her", t.her.to_string());
        put("her_k", t.her_k.to_string());
        put("ablation", t.ablation.name().to_string());
        put("learned_step_noise", t.learned_step_noise.to_string());
        put("discounted_weighting", t.discounted_weighting.to_string());
        put("stochastic_exploration", t.stochastic_exploration.to_string());
        put("pg_temperature", t.pg_temperature.to_string());
        out
    }
}

fn value<T: FromStr>(line: usize, key: &str, raw: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    raw.parse().map_err(|e| ConfigError::Parse { line, msg: format!("bad value `{raw}` for `{key}`: {e}") })
}

fn list(raw: &str) -> impl Iterator<Item = &str> {
    raw.split(',').map(str::trim).filter(|s| !s.is_empty())
}

fn apply(cfg: &mut RunConfig, line: usize, key: &str, raw: &str) -> Result<(), ConfigError> {
    let t = &mut cfg.train;
    match key {
        "env" => {}
        "total_steps" => cfg.total_steps = value(line, key, raw)?,
        "eval_interval" => cfg.eval_interval = value(line, key, raw)?,
        "eval_episodes" => cfg.eval_episodes = value(line, key, raw)?,
        "checkpoint_every" => cfg.checkpoint_every = value(line, key, raw)?,
        "output_dir" => cfg.output_dir = PathBuf::from(raw),
        "seeds" => cfg.seeds = value(line, key, raw)?,
        "cells" => {
            cfg.cells = list(raw)
                .map(|c| Ablation::parse(c).map_err(|e| ConfigError::Parse { line, msg: e.to_string() }))
                .collect::<Result<_, _>>()?
        }
        "k_grid" => {
            cfg.k_grid = list(raw)
                .map(|p| {
                    let (a, b) = p.split_once(':').ok_or_else(|| ConfigError::Parse { line, msg: format!("grid entry `{p}` is not `K_train:K`") })?;
                    Ok(StepPair { k_train: value(line, key, a.trim())?, k: value(line, key, b.trim())? })
                })
                .collect::<Result<_, ConfigError>>()?
        }
        "seed" => t.seed = value(line, key, raw)?,
        "batch_size" => t.batch_size = value(line, key, raw)?,
        "actor_lr" => t.actor_lr = value(line, key, raw)?,
        "critic_lr" => t.critic_lr = value(line, key, raw)?,
        "alpha_lr" => t.alpha_lr = value(line, key, raw)?,
        "weight_decay" => t.weight_decay = value(line, key, raw)?,
        "hidden_units" => t.hidden_units = value(line, key, raw)?,
        "hidden_layers" => t.hidden_layers = value(line, key, raw)?,
        "gamma" => t.gamma = value(line, key, raw)?,
        "tau" => t.tau = value(line, key, raw)?,
        "alpha_init" => t.alpha_init = value(line, key, raw)?,
        "lambda_ent" => t.lambda_ent = value(line, key, raw)?,
        "target_update_interval" => t.target_update_interval = value(line, key, raw)?,
        "env_steps_per_update" => t.env_steps_per_update = value(line, key, raw)?,
        "initial_random_trajectories" => t.initial_random_trajectories = value(line, key, raw)?,
        "workers" => t.workers = value(line, key, raw)?,
        "buffer_size" => t.buffer_size = value(line, key, raw)?,
        "v_min" => t.v_min = value(line, key, raw)?,
        "v_max" => t.v_max = value(line, key, raw)?,
        "atoms" => t.atoms = value(line, key, raw)?,
        "sigma_min" => t.sigma_min = value(line, key, raw)?,
        "sigma_max" => t.sigma_max = value(line, key, raw)?,
        "sigma_data" => t.sigma_data = value(line, key, raw)?,
        "rho" => t.rho = value(line, key, raw)?,
        "k" => t.steps = value(line, key, raw)?,
        "k_train" => t.train_steps = value(line, key, raw)?,
        "her" => t.her = value(line, key, raw)?,
        "her_k" => t.her_k = value(line, key, raw)?,
        "ablation" => t.ablation = Ablation::parse(raw).map_err(|e| ConfigError::Parse { line, msg: e.to_string() })?,
        "learned_step_noise" => t.learned_step_noise = value(line, key, raw)?,
        "discounted_weighting" => t.discounted_weighting = value(line, key, raw)?,
        "stochastic_exploration" => t.stochastic_exploration = value(line, key, raw)?,
        "pg_temperature" => t.pg_temperature = value(line, key, raw)?,
        _ => return Err(ConfigError::UnknownKey { line, key: key.to_string() }),
    }
    Ok(())
}

/// Parses configuration text. Blank lines and `#` comments are ignored;
/// a repeated key is an error.
pub fn parse_str(text: &str) -> Result<RunConfig, ConfigError> {
    let mut entries: BTreeMap<String, (usize, String)> = BTreeMap::new();
    let mut order = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split_once('#').map_or(raw, |(c, _)| c).trim();
        if content.is_empty() {
            continue;
        }
        let (key, val) = content.split_once('=').ok_or_else(|| ConfigError::Parse { line, msg: format!("expected `key = value`, got `{content}`") })?;
        let key = key.trim();
        if key.is_empty() || key.contains(char::is_whitespace) {
            return Err(ConfigError::Parse { line, msg: format!("malformed key `{key}`") });
        }
        if let Some((first, _)) = entries.get(key) {
            return Err(ConfigError::Parse { line, msg: format!("`{key}` already set on line {first}") });
        }
        entries.insert(key.to_string(), (line, val.trim().to_string()));
        order.push(key.to_string());
    }
    let env = entries.get("env").map_or(DEFAULT_ENV, |(_, v)| v.as_str());
    let mut cfg = match RunConfig::for_env(env) {
        Ok(c) => c,
        Err(ConfigError::Range { msg, .. }) => return Err(ConfigError::Parse { line: entries["env"].0, msg }),
        Err(e) => return Err(e),
    };
    for key in &order {
        let (line, raw) = &entries[key];
        apply(&mut cfg, *line, key, raw)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Reads and parses a configuration file.
pub fn parse_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
    parse_str(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_text_gives_table_defaults() {
        let cfg = parse_str("").unwrap();
        assert_eq!(cfg.env, "point_mass_dense");
        assert_eq!(cfg.train.gamma, 0.99);
        assert_eq!(cfg.train.batch_size, 256);
        assert_eq!(cfg.train.alpha_init, 0.2);
        assert_eq!(cfg.train.tau, 0.995);
        assert_eq!((cfg.train.steps, cfg.train.train_steps), (2, 5));
    }

    #[test]
    fn env_defaults_apply_wherever_env_appears() {
        let cfg = parse_str("batch_size = 32\nenv = point_mass_goal\n").unwrap();
        assert_eq!(cfg.train.batch_size, 32);
        assert!(cfg.train.her);
        assert_eq!(cfg.train.workers, 20);
        assert_eq!((cfg.train.v_min, cfg.train.v_max, cfg.train.atoms), (-50.0, 0.0, 101));
    }

    #[test]
    fn gamma_outside_unit_interval_is_a_range_error() {
        assert!(matches!(parse_str("gamma = 1.5"), Err(ConfigError::Range { .. })));
    }

    #[test]
    fn ablation_selects_wiring() {
        let cfg = parse_str("ablation = scalar_single").unwrap();
        assert_eq!(cfg.train.ablation, Ablation::ScalarSingle);
        assert!(!cfg.train.ablation.double() && !cfg.train.ablation.distributional());
    }

    #[test]
    fn errors_carry_line_numbers() {
        match parse_str("# header\n\ngamma 0.9\n") {
            Err(ConfigError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        match parse_str("tau = 0.9\nlearning_rate = 3\n") {
            Err(ConfigError::UnknownKey { line, key }) => assert_eq!((line, key.as_str()), (2, "learning_rate")),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_str("batch_size = many"), Err(ConfigError::Parse { line: 1, .. })));
        assert!(matches!(parse_str("env = cartpole"), Err(ConfigError::Parse { line: 1, .. })));
        assert!(matches!(parse_str("k = 2\nk = 3"), Err(ConfigError::Parse { line: 2, .. })));
    }

    #[test]
    fn comments_and_overrides() {
        let cfg = parse_str("k = 5   # act with five steps\nk_train = 2\ncells = full, scalar_single\nk_grid = 2:2, 5:2\n").unwrap();
        assert_eq!((cfg.train.steps, cfg.train.train_steps), (5, 2));
        assert_eq!(cfg.cells, vec![Ablation::Full, Ablation::ScalarSingle]);
        assert_eq!(cfg.k_grid, vec![StepPair { k_train: 2, k: 2 }, StepPair { k_train: 5, k: 2 }]);
    }

    fn arb_config() -> impl Strategy<Value = RunConfig> {
        (
            prop::sample::select(d2ac::env::ENV_NAMES.to_vec()),
            0.01f64..0.999,
            0.0f64..=1.0,
            1usize..512,
            prop::sample::subsequence(Ablation::ALL.to_vec(), 1..=6),
            any::<u64>(),
            1e-6f64..1e-1,
            prop::collection::vec((1usize..8, 1usize..8), 0..3),
        )
            .prop_map(|(env, gamma, tau, batch, cells, seed, lr, grid)| {
                let mut cfg = RunConfig::for_env(env).unwrap();
                cfg.train.gamma = gamma;
                cfg.train.tau = tau;
                cfg.train.batch_size = batch;
                cfg.train.seed = seed;
                cfg.train.actor_lr = lr;
                cfg.cells = cells;
                cfg.k_grid = grid.into_iter().map(|(k_train, k)| StepPair { k_train, k }).collect();
                cfg
            })
    }

    proptest! {
        #[test]
        fn text_round_trip(cfg in arb_config()) {
            let back = parse_str(&cfg.to_text()).unwrap();
            prop_assert_eq!(&back, &cfg);
            prop_assert_eq!(back.to_text(), cfg.to_text());
        }
    }
}
