//! Command-line front end: load a JSON experiment config, apply flag
//! overrides, run the requested subcommand and write the artifact set.
//!
//! Exit codes: 0 success, 2 config error, 3 runtime (surface/numerics) error.

mod config;
mod runner;
mod svg;

use clap::Parser;
use std::path::PathBuf;
use std::process::ExitCode;

use config::ExperimentConfig;
use runner::CliError;

#[derive(Parser, Debug)]
#[command(name = "k3dyn", about = "Random dynamics experiments on real algebraic surfaces")]
struct Cli {
    /// Path to the JSON experiment config
    #[arg(long)]
    config: PathBuf,
    /// Override the master seed
    #[arg(long)]
    seed: Option<u64>,
    /// Override the output directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the number of trials
    #[arg(long)]
    trials: Option<usize>,
    /// Override the number of steps per trial
    #[arg(long)]
    steps: Option<usize>,
    /// Suppress informational output
    #[arg(long)]
    quiet: bool,
}

fn run(cli: &Cli) -> Result<PathBuf, CliError> {
    let text = std::fs::read_to_string(&cli.config)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", cli.config.display())))?;
    let mut cfg = ExperimentConfig::from_json(&text).map_err(CliError::Config)?;
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(t) = cli.trials {
        if t == 0 {
            return Err(CliError::Config("trials must be positive".into()));
        }
        cfg.trials = t;
    }
    if let Some(n) = cli.steps {
        if n == 0 {
            return Err(CliError::Config("steps must be positive".into()));
        }
        cfg.n = n;
    }
    if !cfg.weights_normalized() && !cli.quiet {
        eprintln!("note: generator weights do not sum to 1; normalizing");
    }
    let cfg = cfg.canonical();
    let out = cli
        .out
        .clone()
        .or_else(|| cfg.out.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    let set = runner::run_experiment(&cfg, cli.quiet)?;
    runner::write_artifacts(&cfg, &out, &set)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(summary) => {
            if !cli.quiet {
                println!("wrote {}", summary.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{e}");
            match e {
                CliError::Config(_) => ExitCode::from(2),
                CliError::Runtime(_) => ExitCode::from(3),
            }
        }
    }
}
