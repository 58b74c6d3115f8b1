use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use kpzlab::config::SEED_ENV;
use kpzlab::verify::{suite, Scale};
use kpzlab::{run_experiment, CliError, ExperimentConfig, ReportBundle};

const DEFAULT_OUT: &str = "kpzlab-out";

#[derive(Parser)]
#[command(name = "kpzlab", version, about = "Run KPZ-class simulation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment from a JSON config.
    Run {
        config: PathBuf,
        /// Override a config value, e.g. `--set replicas=100`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the acceptance suite.
    Verify {
        #[arg(long, default_value = "full")]
        scale: Scale,
        #[arg(long, env = SEED_ENV, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load(path: &Path, sets: &[String], workers: Option<usize>) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut cfg = ExperimentConfig::parse(&text)?;
    cfg.apply_env_seed(std::env::var(SEED_ENV).ok().as_deref())?;
    for s in sets {
        cfg.apply_set(s)?;
    }
    if let Some(w) = workers {
        cfg.workers = w;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn report(bundle: &ReportBundle, out: &Path) -> Result<bool, CliError> {
    bundle.emit(out)?;
    for c in &bundle.checks {
        let line = format!(
            "{} {}/{}: {}",
            if c.passed { "PASS" } else { "FAIL" },
            bundle.experiment,
            c.name,
            c.detail
        );
        if c.passed {
            println!("{line}");
        } else {
            eprintln!("{line}");
        }
    }
    Ok(bundle.passed())
}

fn run(cli: Cli) -> Result<bool, CliError> {
    match cli.command {
        Command::Run {
            config,
            set,
            workers,
            out,
        } => {
            let cfg = load(&config, &set, workers)?;
            let dir = out
                .or_else(|| cfg.output_dir.clone())
                .unwrap_or_else(|| DEFAULT_OUT.into());
            report(&run_experiment(&cfg)?, &dir)
        }
        Command::Verify {
            scale,
            seed,
            workers,
            out,
        } => {
            let dir = out.unwrap_or_else(|| DEFAULT_OUT.into());
            let mut all = true;
            for cfg in suite(scale, seed, workers)? {
                all &= report(&run_experiment(&cfg)?, &dir)?;
            }
            Ok(all)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
