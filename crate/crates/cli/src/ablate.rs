//! Multi-seed comparison of agent wirings and diffusion step counts.

use std::fmt;

use anyhow::Result;
use d2ac::engine::Ablation;

use crate::config::{RunConfig, StepPair};
use crate::train::{train_in_memory, TrainOutcome};

/// Seed of run `seed_index` in cell `cell_index`.
pub fn cell_seed(base: u64, cell_index: usize, seed_index: usize) -> u64 {
    base + cell_index as u64 * 10_000 + seed_index as u64
}

#[derive(Clone, Debug, PartialEq)]
pub struct SeedResult {
    pub seed: u64,
    pub final_return: f64,
    pub best_return: f64,
    pub success_rate: f64,
    pub survival_rate: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CellResult {
    pub ablation: Ablation,
    pub steps: StepPair,
    pub runs: Vec<SeedResult>,
}

impl CellResult {
    pub fn label(&self) -> String {
        format!("{} K_train={} K={}", self.ablation.name(), self.steps.k_train, self.steps.k)
    }

    pub fn final_returns(&self) -> Vec<f64> {
        self.runs.iter().map(|r| r.final_return).collect()
    }

    pub fn mean(&self) -> f64 {
        mean_std(&self.final_returns()).0
    }

    pub fn std(&self) -> f64 {
        mean_std(&self.final_returns()).1
    }
}

/// Mean and sample standard deviation (zero for fewer than two values).
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct AblationTable {
    pub env: String,
    pub total_steps: u64,
    pub cells: Vec<CellResult>,
}

impl AblationTable {
    pub fn cell(&self, ablation: Ablation, steps: StepPair) -> Option<&CellResult> {
        self.cells.iter().find(|c| c.ablation == ablation && c.steps == steps)
    }
}

impl fmt::Display for AblationTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} after {} steps", self.env, self.total_steps)?;
        writeln!(f, "{:<36} {:>10} {:>10}  final returns", "cell", "mean", "std")?;
        for c in &self.cells {
            let runs: Vec<String> = c.runs.iter().map(|r| format!("{:.2}", r.final_return)).collect();
            writeln!(f, "{:<36} {:>10.3} {:>10.3}  [{}]", c.label(), c.mean(), c.std(), runs.join(", "))?;
        }
        Ok(())
    }
}

/// The `(ablation, K_train/K)` cells of `cfg`, in run order.
pub fn cell_plan(cfg: &RunConfig) -> Vec<(Ablation, StepPair)> {
    let pairs = if cfg.k_grid.is_empty() { vec![StepPair { k_train: cfg.train.train_steps, k: cfg.train.steps }] } else { cfg.k_grid.clone() };
    cfg.cells.iter().flat_map(|&a| pairs.iter().map(move |&p| (a, p))).collect()
}

/// The run configuration of one seed of one cell.
pub fn cell_config(cfg: &RunConfig, cell_index: usize, ablation: Ablation, steps: StepPair, seed_index: usize) -> RunConfig {
    let mut c = cfg.clone();
    c.train.ablation = ablation;
    c.train.train_steps = steps.k_train;
    c.train.steps = steps.k;
    c.train.seed = cell_seed(cfg.train.seed, cell_index, seed_index);
    c
}

fn seed_result(seed: u64, out: &TrainOutcome) -> SeedResult {
    let last = out.final_eval().unwrap_or_default();
    SeedResult {
        seed,
        final_return: last.mean_return,
        best_return: out.best_return().unwrap_or(f64::NAN),
        success_rate: last.success_rate,
        survival_rate: last.survival_rate,
    }
}

/// Runs every cell of [`cell_plan`] over `cfg.seeds` seeds, sequentially.
/// `progress` is called after each run.
pub fn run_ablate_with<F>(cfg: &RunConfig, mut progress: F) -> Result<AblationTable>
where
    F: FnMut(&str, &SeedResult),
{
    let mut table = AblationTable { env: cfg.env.clone(), total_steps: cfg.total_steps, cells: Vec::new() };
    for (ci, (ablation, steps)) in cell_plan(cfg).into_iter().enumerate() {
        let mut cell = CellResult { ablation, steps, runs: Vec::new() };
        for si in 0..cfg.seeds {
            let run = cell_config(cfg, ci, ablation, steps, si);
            let out = train_in_memory(&run)?;
            let r = seed_result(run.train.seed, &out);
            progress(&cell.label(), &r);
            cell.runs.push(r);
        }
        table.cells.push(cell);
    }
    Ok(table)
}

pub fn run_ablate(cfg: &RunConfig) -> Result<AblationTable> {
    run_ablate_with(cfg, |_, _| {})
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_follow_the_cell_layout() {
        assert_eq!(cell_seed(7, 0, 0), 7);
        assert_eq!(cell_seed(7, 2, 3), 20_010);
    }

    #[test]
    fn mean_and_sample_std() {
        let (m, s) = mean_std(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((s - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(mean_std(&[3.0]), (3.0, 0.0));
    }

    #[test]
    fn grid_crosses_cells() {
        let mut cfg = RunConfig::for_env("point_mass_dense").unwrap();
        cfg.cells = vec![Ablation::Full, Ablation::ScalarSingle];
        assert_eq!(cell_plan(&cfg).len(), 2);
        cfg.k_grid = vec![StepPair { k_train: 2, k: 2 }, StepPair { k_train: 5, k: 2 }];
        let plan = cell_plan(&cfg);
        assert_eq!(plan.len(), 4);
        assert_eq!(plan[1], (Ablation::Full, StepPair { k_train: 5, k: 2 }));
        let c = cell_config(&cfg, 3, plan[3].0, plan[3].1, 1);
        assert_eq!((c.train.ablation, c.train.train_steps, c.train.steps, c.train.seed), (Ablation::ScalarSingle, 5, 2, 30_001));
    }
}
