use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use delaylin::harness::{self, ExperimentConfig, SweepOptions};
use delaylin::spanner::{certify, compute_spanner, default_budget};
use delaylin::{BanditInstance, Error};

#[derive(Parser)]
#[command(name = "delaylin", version, about = "Linear bandits with payoff-proportional feedback delay")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every configured algorithm on every seed.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides `outputDir` from the config.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        jobs: Option<usize>,
        /// Keep every F-th round in the aggregate curve.
        #[arg(long, default_value_t = 1)]
        downsample: u64,
    },
    /// Print the final-regret table of a finished sweep.
    Summarize {
        #[arg(long = "in")]
        dir: PathBuf,
    },
    /// Recompute aggregates from traces and check them against the stored files.
    Audit {
        #[arg(long = "in")]
        dir: PathBuf,
    },
    /// Build and certify a spanner for an instance file.
    SpannerCheck {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        budget: Option<usize>,
    },
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::InvalidInstance(_) => Failure::Config(e.to_string()),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

fn read_config(path: &PathBuf) -> Result<ExperimentConfig, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    Ok(ExperimentConfig::from_json(&text)?)
}

fn execute(command: Command) -> Result<(), Failure> {
    match command {
        Command::Run { config, out, jobs, downsample } => {
            let cfg = read_config(&config)?;
            if downsample == 0 {
                return Err(Failure::Config("--downsample must be at least 1".into()));
            }
            if jobs == Some(0) {
                return Err(Failure::Config("--jobs must be at least 1".into()));
            }
            let out = out.unwrap_or_else(|| cfg.output_dir.clone());
            let result = harness::run_sweep(&cfg, &out, SweepOptions { jobs, downsample })?;
            print!("{}", harness::render_table(&result.summary));
        }
        Command::Summarize { dir } => {
            let summary = harness::read_summary(&dir)?;
            print!("{}", harness::render_table(&summary));
        }
        Command::Audit { dir } => {
            let report = harness::audit(&dir)?;
            println!("{}", serde_json::to_string_pretty(&report).map_err(Error::from)?);
            if !report.is_clean() {
                return Err(Failure::Runtime(format!("audit found {} problem(s)", report.problems.len())));
            }
        }
        Command::SpannerCheck { instance, budget } => {
            let text = fs::read_to_string(&instance).map_err(|e| Failure::Config(format!("{}: {e}", instance.display())))?;
            let inst = BanditInstance::from_json(&text)?;
            let spanner = compute_spanner(&inst.actions, budget.unwrap_or_else(|| default_budget(inst.dim())));
            let cert = certify(&inst.actions, &spanner)?;
            let report = serde_json::json!({
                "members": spanner.members,
                "size": spanner.len(),
                "targetSize": spanner.target_size,
                "rho": cert.norm_factor,
                "reconstructionError": cert.reconstruction_error,
                "approximate": cert.approximate,
            });
            println!("{}", serde_json::to_string_pretty(&report).map_err(Error::from)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(m)) => {
            eprintln!("config error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}
