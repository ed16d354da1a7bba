//! Training and evaluation runs with metrics and checkpoints on disk.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use d2ac::engine::{visit_and_main_coverage, EvalMetrics, StepDiagnostics, Trainer};
use d2ac::nn::Checkpoint;

use crate::config::RunConfig;
use crate::metrics::{finite, MetricsRecord, MetricsWriter};

pub const METRICS_FILE: &str = "metrics.jsonl";
pub const CONFIG_FILE: &str = "config.txt";
pub const CHECKPOINT_DIR: &str = "checkpoints";

/// One evaluation point of a run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvalPoint {
    pub step: u64,
    pub metrics: EvalMetrics,
}

#[derive(Clone, Debug, Default)]
pub struct TrainOutcome {
    pub final_step: u64,
    pub evals: Vec<EvalPoint>,
    /// Visit and main coverage of the training-time visit grid.
    pub coverage: (f64, f64),
    pub checkpoint: Option<PathBuf>,
}

impl TrainOutcome {
    pub fn final_eval(&self) -> Option<EvalMetrics> {
        self.evals.last().map(|e| e.metrics)
    }

    pub fn best_return(&self) -> Option<f64> {
        self.evals.iter().map(|e| e.metrics.mean_return).reduce(f64::max)
    }
}

/// Metrics record for `step`, from an evaluation and the latest gradient step.
pub fn record(step: u64, eval: Option<&EvalMetrics>, diag: Option<&StepDiagnostics>, coverage: Option<(f64, f64)>) -> MetricsRecord {
    MetricsRecord {
        step,
        episode_return: eval.and_then(|e| finite(e.mean_return)),
        success_rate: eval.map(|e| e.success_rate),
        survival_rate: eval.map(|e| e.survival_rate),
        critic_loss: diag.and_then(|d| finite(d.critic_loss)),
        actor_loss: diag.and_then(|d| finite(d.actor_loss)),
        alpha: diag.and_then(|d| finite(d.alpha)),
        mean_q: diag.and_then(|d| finite(d.mean_q)),
        visit_coverage: coverage.map(|c| c.0),
        main_coverage: coverage.map(|c| c.1),
        error: None,
    }
}

fn coverage_of(trainer: &Trainer) -> Option<(f64, f64)> {
    let counts = trainer.visit_grid().counts();
    counts.iter().any(|c| *c > 0).then(|| visit_and_main_coverage(counts))
}

/// Evaluation reset seeds depend on the run seed and the step only.
fn eval_seed(cfg: &RunConfig, step: u64) -> u64 {
    cfg.train.seed ^ step.wrapping_mul(0x2545_F491_4F6C_DD1D)
}

/// Trains in memory, evaluating every `eval_interval` steps and once at the
/// end. `on_eval` sees the trainer after each evaluation.
pub fn train_with<F>(cfg: &RunConfig, trainer: &mut Trainer, mut on_eval: F) -> Result<TrainOutcome>
where
    F: FnMut(&Trainer, &EvalPoint) -> Result<()>,
{
    let mut out = TrainOutcome::default();
    while trainer.env_steps() < cfg.total_steps {
        let next = ((trainer.env_steps() / cfg.eval_interval + 1) * cfg.eval_interval).min(cfg.total_steps);
        trainer.run_until(next)?;
        let step = trainer.env_steps();
        let point = EvalPoint { step, metrics: trainer.evaluate(cfg.eval_episodes, eval_seed(cfg, step))? };
        on_eval(trainer, &point)?;
        out.evals.push(point);
    }
    out.final_step = trainer.env_steps();
    out.coverage = coverage_of(trainer).unwrap_or_default();
    Ok(out)
}

/// A fresh in-memory run; nothing is written to disk.
pub fn train_in_memory(cfg: &RunConfig) -> Result<TrainOutcome> {
    let mut trainer = Trainer::new(&cfg.train, &cfg.env)?;
    train_with(cfg, &mut trainer, |_, _| Ok(()))
}

/// Agent parameters plus the run position.
pub fn trainer_checkpoint(trainer: &Trainer) -> Checkpoint {
    let mut ck = trainer.agent().to_checkpoint();
    ck.meta.insert("env".into(), trainer.env_name().to_string());
    ck.meta.insert("env_steps".into(), trainer.env_steps().to_string());
    ck
}

fn checkpoint_path(dir: &Path, step: u64) -> PathBuf {
    dir.join(CHECKPOINT_DIR).join(format!("step-{step:012}"))
}

/// The checkpoint with the highest step under `output_dir`.
pub fn latest_checkpoint(output_dir: &Path) -> Option<PathBuf> {
    let entries = fs::read_dir(output_dir.join(CHECKPOINT_DIR)).ok()?;
    entries
        .filter_map(|e| e.ok())
        .filter(|e| e.file_name().to_string_lossy().starts_with("step-"))
        .map(|e| e.path())
        .max()
}

/// Loads agent parameters and the step counter into `trainer`.
pub fn restore(trainer: &mut Trainer, path: &Path) -> Result<()> {
    let ck = Checkpoint::load(path).with_context(|| format!("loading checkpoint {}", path.display()))?;
    if let Ok(env) = ck.meta("env") {
        anyhow::ensure!(env == trainer.env_name(), "checkpoint was trained on `{env}`, config uses `{}`", trainer.env_name());
    }
    trainer.agent_mut().load_checkpoint(&ck)?;
    if let Ok(steps) = ck.meta("env_steps") {
        trainer.set_env_steps(steps.parse().context("bad env_steps in checkpoint")?);
    }
    Ok(())
}

/// Trains to `total_steps`, appending one metrics line per evaluation to
/// `<output_dir>/metrics.jsonl`.
///
/// A checkpoint is written every `checkpoint_every` evaluations and at the
/// end. With `resume`, the latest checkpoint's parameters and step counter
/// are restored (the replay buffer is not saved, so the random warmup runs
/// again) and metrics are appended. A total of zero steps runs the random
/// warmup only. A non-finite loss stops the run with an error after a final
/// record carrying the diagnostics.
pub fn run_train(cfg: &RunConfig, resume: bool) -> Result<TrainOutcome> {
    let dir = &cfg.output_dir;
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    fs::write(dir.join(CONFIG_FILE), cfg.to_text())?;
    let mut trainer = Trainer::new(&cfg.train, &cfg.env)?;
    if resume {
        if let Some(path) = latest_checkpoint(dir) {
            restore(&mut trainer, &path)?;
        }
    }
    let mut writer = MetricsWriter::open(&dir.join(METRICS_FILE))?;

    if cfg.total_steps == 0 {
        while trainer.warming_up() {
            trainer.env_step()?;
        }
        let step = trainer.env_steps().max(writer.last_step().map_or(0, |s| s + 1));
        writer.append(&record(step, None, None, coverage_of(&trainer)))?;
        let path = checkpoint_path(dir, trainer.env_steps());
        trainer_checkpoint(&trainer).save(&path)?;
        return Ok(TrainOutcome { final_step: trainer.env_steps(), coverage: coverage_of(&trainer).unwrap_or_default(), checkpoint: Some(path), ..Default::default() });
    }

    let mut evals_done = 0usize;
    let result = train_with(cfg, &mut trainer, |t, point| {
        writer.append(&record(point.step, Some(&point.metrics), t.last_diagnostics().as_ref(), coverage_of(t)))?;
        evals_done += 1;
        if evals_done % cfg.checkpoint_every == 0 {
            trainer_checkpoint(t).save(&checkpoint_path(dir, point.step))?;
        }
        Ok(())
    });
    match result {
        Ok(mut out) => {
            let path = checkpoint_path(dir, trainer.env_steps());
            trainer_checkpoint(&trainer).save(&path)?;
            out.checkpoint = Some(path);
            Ok(out)
        }
        Err(e) => {
            let step = trainer.env_steps().max(writer.last_step().map_or(0, |s| s + 1));
            let mut rec = record(step, None, trainer.last_diagnostics().as_ref(), coverage_of(&trainer));
            rec.error = Some(format!("{e:#}"));
            writer.append(&rec)?;
            Err(e)
        }
    }
}

/// Evaluates a saved agent for `eval_episodes` episodes.
pub fn run_eval(checkpoint: &Path, cfg: &RunConfig) -> Result<EvalMetrics> {
    let mut trainer = Trainer::new(&cfg.train, &cfg.env)?;
    restore(&mut trainer, checkpoint)?;
    Ok(trainer.evaluate(cfg.eval_episodes, eval_seed(cfg, trainer.env_steps()))?)
}
