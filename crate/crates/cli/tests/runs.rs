use std::fs;
use std::path::Path;
use std::process::Command;

use d2ac::critic::{ReturnDistribution, Support};
use d2ac::engine::Ablation;
use d2ac::nn::Checkpoint;
use d2ac_cli::ablate::{run_ablate, AblationTable};
use d2ac_cli::check::{check_projection_mass, run_check_with};
use d2ac_cli::config::{RunConfig, StepPair};
use d2ac_cli::metrics::read_metrics;
use d2ac_cli::train::{latest_checkpoint, run_eval, run_train, METRICS_FILE};

fn tiny(env: &str, dir: &Path) -> RunConfig {
    let mut cfg = RunConfig::for_env(env).unwrap();
    cfg.train.hidden_units = 16;
    cfg.train.batch_size = 16;
    cfg.train.initial_random_trajectories = 2;
    cfg.train.workers = 2;
    cfg.total_steps = 400;
    cfg.eval_interval = 100;
    cfg.eval_episodes = 3;
    cfg.checkpoint_every = 2;
    cfg.output_dir = dir.to_path_buf();
    cfg
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    out.sort();
    out
}

#[test]
fn training_writes_metrics_and_checkpoints() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny("point_mass_dense", dir.path());
    let out = run_train(&cfg, false).unwrap();
    assert_eq!(out.final_step, 400);
    let recs = read_metrics(&dir.path().join(METRICS_FILE)).unwrap();
    assert_eq!(recs.iter().map(|r| r.step).collect::<Vec<_>>(), vec![100, 200, 300, 400]);
    assert!(recs.iter().all(|r| r.episode_return.is_some() && r.visit_coverage.is_some()));
    assert!(recs.last().unwrap().critic_loss.is_some());
    let cks: Vec<_> = fs::read_dir(dir.path().join("checkpoints")).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    assert_eq!(cks.len(), 2, "{cks:?}");
    assert_eq!(latest_checkpoint(dir.path()), out.checkpoint);
}

#[test]
fn zero_steps_runs_warmup_only() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = tiny("point_mass_dense", dir.path());
    cfg.total_steps = 0;
    let out = run_train(&cfg, false).unwrap();
    assert!(out.evals.is_empty());
    let recs = read_metrics(&dir.path().join(METRICS_FILE)).unwrap();
    assert_eq!(recs.len(), 1);
    assert!(recs[0].critic_loss.is_none() && recs[0].episode_return.is_none());
    let ck = Checkpoint::load(out.checkpoint.as_ref().unwrap()).unwrap();
    assert_eq!(ck.meta("updates").unwrap(), "0");
}

#[test]
fn resume_continues_the_step_counter_and_appends() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = tiny("point_mass_dense", dir.path());
    cfg.total_steps = 200;
    run_train(&cfg, false).unwrap();
    cfg.total_steps = 400;
    let out = run_train(&cfg, true).unwrap();
    assert_eq!(out.evals.first().unwrap().step, 300);
    let recs = read_metrics(&dir.path().join(METRICS_FILE)).unwrap();
    assert_eq!(recs.iter().map(|r| r.step).collect::<Vec<_>>(), vec![100, 200, 300, 400]);
    let ck = Checkpoint::load(&latest_checkpoint(dir.path()).unwrap()).unwrap();
    assert_eq!(ck.meta("env_steps").unwrap(), "400");
    let m = run_eval(&latest_checkpoint(dir.path()).unwrap(), &cfg).unwrap();
    assert_eq!(m.episodes, 3);
}

#[test]
fn non_finite_loss_stops_with_a_diagnostic_record() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = tiny("point_mass_dense", dir.path());
    // α·log-likelihood overflows
    cfg.train.alpha_init = 1e308;
    assert!(run_train(&cfg, false).is_err());
    let recs = read_metrics(&dir.path().join(METRICS_FILE)).unwrap();
    let last = recs.last().unwrap();
    assert!(last.error.as_deref().unwrap().contains("non-finite"), "{last:?}");
}

#[test]
fn checkpoint_save_load_save_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny("predator_prey", &dir.path().join("run"));
    let out = run_train(&cfg, false).unwrap();
    let first = out.checkpoint.unwrap();
    let again = dir.path().join("again");
    Checkpoint::load(&first).unwrap().save(&again).unwrap();
    assert_eq!(dir_bytes(&first), dir_bytes(&again));
}

#[test]
fn broken_projection_fails_the_mass_check() {
    /// Drops mass that lands outside the support instead of moving it to the end atoms.
    fn unnormalized(shifted: &[f64], p: &ReturnDistribution, support: &Support) -> ReturnDistribution {
        let mut probs = vec![0.0; support.len()];
        for (&z, &w) in shifted.iter().zip(&p.probs) {
            if z < support.v_min() || z > support.v_max() {
                continue;
            }
            let b = (z - support.v_min()) / support.spacing();
            let lo = (b.floor() as usize).min(support.len() - 1);
            let up = b - lo as f64;
            probs[lo] += w * (1.0 - up);
            if lo + 1 < support.len() {
                probs[lo + 1] += w * up;
            }
        }
        ReturnDistribution { probs }
    }
    assert!(!check_projection_mass(unnormalized).0);
    assert!(check_projection_mass(d2ac::critic::project_dist).0);
    let report = run_check_with(unnormalized);
    let failed: Vec<_> = report.failures().iter().map(|r| (r.module, r.property)).collect();
    assert_eq!(failed, vec![("critic", "projection_mass")]);
}

fn small_ablation(dir: &Path) -> RunConfig {
    let mut cfg = tiny("point_mass_dense", dir);
    cfg.total_steps = 300;
    cfg.eval_interval = 300;
    cfg.seeds = 2;
    cfg
}

#[test]
fn ablation_table_has_one_row_per_cell_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_ablation(dir.path());
    cfg.cells = vec![Ablation::Full, Ablation::ScalarSingle];
    let a = run_ablate(&cfg).unwrap();
    assert_eq!(a.cells.len(), 2);
    assert!(a.cells.iter().all(|c| c.runs.len() == 2 && c.mean().is_finite()));
    assert_eq!(a.cells[1].runs[1].seed, 10_001);
    let b = run_ablate(&cfg).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.to_string().lines().count(), 4);
}

#[test]
fn step_grid_cells_exist_and_run() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_ablation(dir.path());
    cfg.seeds = 1;
    cfg.cells = vec![Ablation::Full];
    cfg.k_grid = vec![StepPair { k_train: 2, k: 2 }, StepPair { k_train: 5, k: 2 }];
    let t: AblationTable = run_ablate(&cfg).unwrap();
    assert!(t.cell(Ablation::Full, StepPair { k_train: 2, k: 2 }).is_some());
    assert!(t.cell(Ablation::Full, StepPair { k_train: 5, k: 2 }).is_some());
}

#[test]
fn binary_trains_from_a_config_file_honouring_the_output_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("run.cfg");
    fs::write(
        &cfg_path,
        "# smoke run\nenv = point_mass_dense\ntotal_steps = 200\neval_interval = 100\neval_episodes = 2\n\
         hidden_units = 8\nbatch_size = 8\ninitial_random_trajectories = 1\nworkers = 1\noutput_dir = nowhere\n",
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let status = Command::new(env!("CARGO_BIN_EXE_d2ac"))
        .arg("train")
        .arg(&cfg_path)
        .env("D2AC_OUTPUT_DIR", &out_dir)
        .output()
        .unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    assert_eq!(read_metrics(&out_dir.join(METRICS_FILE)).unwrap().len(), 2);

    let ck = latest_checkpoint(&out_dir).unwrap();
    let eval = Command::new(env!("CARGO_BIN_EXE_d2ac")).arg("eval").arg(&ck).arg(&cfg_path).output().unwrap();
    assert!(eval.status.success());
    assert!(String::from_utf8_lossy(&eval.stdout).contains("mean_return"));

    fs::write(&cfg_path, "gamma = 1.5\n").unwrap();
    let bad = Command::new(env!("CARGO_BIN_EXE_d2ac")).arg("train").arg(&cfg_path).output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("gamma"));
}
