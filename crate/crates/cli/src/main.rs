//! `aoi`: exact AoI / PAoI distributions, simulation, sweeps and validation.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use config::{load_file_config, FileConfig, GridSpec, Overrides, RunConfig, SweepSpec};
use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "aoi", version, about = "Age of information in bufferless and single-buffer queues")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Model JSON file.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Run configuration JSON; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (default: current directory).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: logical cores).
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Exact AoI and PAoI distributions: result.json, aoi.csv, paoi.csv.
    Solve {
        #[command(flatten)]
        common: Common,
        /// Evaluation grid `min:max:points[:log]`.
        #[arg(long)]
        grid: Option<GridSpec>,
    },
    /// Discrete-event simulation: sim.json, aoi.csv, paoi.csv.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        grid: Option<GridSpec>,
        #[arg(long)]
        seed: Option<u64>,
        /// Receptions kept after warmup.
        #[arg(long)]
        cycles: Option<usize>,
        /// Receptions discarded first.
        #[arg(long)]
        warmup: Option<usize>,
        /// Independent runs (seeds seed, seed+1, ...) pooled into one result.
        #[arg(long, default_value_t = 1)]
        replications: usize,
        /// Also write every k-th PAoI sample to paoi_samples.csv.
        #[arg(long, value_name = "K")]
        thin: Option<usize>,
    },
    /// Mean AoI and PAoI over a parameter: sweep.csv.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// `name=v1,v2,...` or `name=start:stop:count` with name one of p, r, rho,
        /// scov_theta, scov_lambda.
        #[arg(long)]
        sweep: Option<SweepSpec>,
    },
    /// Reproduction checks; exits 3 unless every selected criterion passes.
    Validate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        seed: Option<u64>,
        /// Receptions per simulation.
        #[arg(long)]
        cycles: Option<usize>,
        #[arg(long)]
        warmup: Option<usize>,
        /// Comma-separated criterion ids (default: all).
        #[arg(long)]
        criteria: Option<String>,
        /// Multiplies every numeric tolerance.
        #[arg(long, default_value_t = 1.0)]
        tolerance_scale: f64,
    },
}

fn configure(common: &Common, mut flags: Overrides) -> Result<RunConfig, CliError> {
    let (file, base) = match &common.config {
        Some(path) => (
            load_file_config(path)?,
            path.parent().map(PathBuf::from).unwrap_or_default(),
        ),
        None => (FileConfig::default(), PathBuf::new()),
    };
    flags.model = common.model.clone();
    flags.out = common.out.clone();
    flags.jobs = common.jobs;
    let (cfg, jobs) = RunConfig::merge(file, &base, flags)?;
    if let Some(n) = jobs {
        if n == 0 {
            return Err(CliError::Usage("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Failure(e.to_string()))?;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Solve { common, grid } => {
            let cfg = configure(&common, Overrides { grid, ..Overrides::default() })?;
            commands::solve(&cfg)
        }
        Command::Simulate {
            common,
            grid,
            seed,
            cycles,
            warmup,
            replications,
            thin,
        } => {
            let flags = Overrides {
                grid,
                seed,
                cycles,
                warmup,
                ..Overrides::default()
            };
            let cfg = configure(&common, flags)?;
            if replications == 0 {
                return Err(CliError::Usage("--replications must be at least 1".into()));
            }
            commands::simulate(&cfg, replications, thin)
        }
        Command::Sweep { common, sweep } => {
            let cfg = configure(&common, Overrides { sweep, ..Overrides::default() })?;
            commands::sweep(&cfg)
        }
        Command::Validate {
            common,
            seed,
            cycles,
            warmup,
            criteria,
            tolerance_scale,
        } => {
            let flags = Overrides {
                seed,
                cycles,
                warmup,
                ..Overrides::default()
            };
            let cfg = configure(&common, flags)?;
            let criteria = criteria.as_deref().map(commands::parse_criteria).transpose()?;
            commands::validate(&cfg, criteria, tolerance_scale)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}
