use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};
use d2ac_cli::{ablate, check, config, train};

#[derive(Parser)]
#[command(name = "d2ac", version, about = "Train, evaluate and check distributional diffusion actor-critic agents")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train an agent, writing metrics and checkpoints to the output directory.
    Train {
        config: PathBuf,
        /// Continue from the latest checkpoint in the output directory.
        #[arg(long)]
        resume: bool,
    },
    /// Evaluate a saved agent.
    Eval { checkpoint: PathBuf, config: PathBuf },
    /// Run the numerical self-checks.
    Check,
    /// Compare ablation cells over several seeds.
    Ablate { config: PathBuf },
}

fn load(path: &PathBuf) -> Result<config::RunConfig> {
    let mut cfg = config::parse_config(path)?;
    cfg.apply_env_overrides();
    Ok(cfg)
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Train { config, resume } => {
            let cfg = load(&config)?;
            let out = train::run_train(&cfg, resume)?;
            if let Some(last) = out.evals.last() {
                println!(
                    "step {}: return {:.3}, success {:.3}, survival {:.3}",
                    last.step, last.metrics.mean_return, last.metrics.success_rate, last.metrics.survival_rate
                );
            }
            println!("metrics in {}", cfg.output_dir.join(train::METRICS_FILE).display());
            Ok(true)
        }
        Command::Eval { checkpoint, config } => {
            let cfg = load(&config)?;
            let m = train::run_eval(&checkpoint, &cfg)?;
            println!("{}", serde_json::json!({
                "episodes": m.episodes,
                "mean_return": m.mean_return,
                "success_rate": m.success_rate,
                "survival_rate": m.survival_rate,
            }));
            Ok(true)
        }
        Command::Check => {
            let report = check::run_check();
            println!("{report}");
            Ok(report.passed())
        }
        Command::Ablate { config } => {
            let cfg = load(&config)?;
            let table = ablate::run_ablate_with(&cfg, |cell, r| eprintln!("{cell} seed {}: final return {:.3}", r.seed, r.final_return))?;
            std::fs::create_dir_all(&cfg.output_dir)?;
            std::fs::write(cfg.output_dir.join("ablation.txt"), table.to_string())?;
            print!("{table}");
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
