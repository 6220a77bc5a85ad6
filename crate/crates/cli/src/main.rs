//! `gridfreq`: characterize safe regions of power-injection disturbances
//! under linearized swing dynamics and sample disturbances conditioned on
//! a RoCoF violation.

mod config;
mod pipeline;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use config::{Overrides, RunConfig};

#[derive(Parser)]
#[command(
    name = "gridfreq",
    version,
    about = "Safe regions and conditional sampling of RoCoF-violating disturbances",
    after_help = "Environment overrides (between config file and flags): \
GRIDFREQ_SEED, GRIDFREQ_SAMPLES, GRIDFREQ_BURN_IN, GRIDFREQ_CHAINS, GRIDFREQ_N, GRIDFREQ_OUT."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Run configuration (TOML, or a manifest.json to replay a run).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// RNG seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Retained sample count override (per chain).
    #[arg(long)]
    samples: Option<usize>,
    /// Burn-in length override.
    #[arg(long = "burn-in")]
    burn_in: Option<usize>,
    /// Concurrent chain count override.
    #[arg(long)]
    chains: Option<usize>,
    /// Time-discretization override (region N).
    #[arg(long = "N")]
    n_steps: Option<usize>,
    /// Output directory override.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Parse the case, apply machine parameters and Kron-reduce.
    Reduce(CommonArgs),
    /// Build the configured safe region and cache it as JSON.
    Region(CommonArgs),
    /// Run the conditional sampler and write samples, stats and manifest.
    Sample(CommonArgs),
    /// Recompute statistics from a samples CSV and a cached region.
    Report {
        #[command(flatten)]
        common: CommonArgs,
        /// Samples CSV produced by `sample`.
        #[arg(long)]
        samples_file: PathBuf,
        /// Region JSON produced by `region`.
        #[arg(long)]
        region_file: PathBuf,
    },
    /// Export nodal frequency/RoCoF traces for one disturbance.
    Trajectory {
        #[command(flatten)]
        common: CommonArgs,
        /// Disturbance vector, comma-separated p.u. values per generator.
        #[arg(long)]
        u: String,
        /// Trace end time, seconds.
        #[arg(long, default_value_t = 2.0)]
        t_max: f64,
        /// Grid step, seconds.
        #[arg(long, default_value_t = 0.005)]
        step: f64,
    },
    /// Built-in 2-D benchmark: Gaussian target conditioned outside a
    /// diamond; needs no config file.
    DemoDiamond {
        #[arg(long, default_value = "out/demo-diamond")]
        out: PathBuf,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, default_value_t = 5_000)]
        burn_in: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

/// Usage problems (bad flags, unreadable inputs) exit with 2; runtime
/// failures with 1.
fn load_config(common: &CommonArgs) -> Result<RunConfig> {
    let path = common
        .config
        .as_ref()
        .ok_or_else(|| anyhow::anyhow!("this command needs --config <path>"))?;
    let mut config = RunConfig::load(path)?;
    config.apply_overrides(&Overrides {
        seed: common.seed,
        samples: common.samples,
        burn_in: common.burn_in,
        chains: common.chains,
        n_steps: common.n_steps,
        out: common.out.clone(),
    })?;
    Ok(config)
}

fn run() -> Result<ExitCode> {
    let cli = Cli::parse();
    match &cli.command {
        Command::Reduce(common) => {
            let config = usage(load_config(common))?;
            pipeline::cmd_reduce(&config)?;
        }
        Command::Region(common) => {
            let config = usage(load_config(common))?;
            pipeline::cmd_region(&config)?;
        }
        Command::Sample(common) => {
            let config = usage(load_config(common))?;
            pipeline::cmd_sample(&config)?;
        }
        Command::Report { common, samples_file, region_file } => {
            let config = usage(load_config(common))?;
            pipeline::cmd_report(&config, samples_file, region_file, common.n_steps)?;
        }
        Command::Trajectory { common, u, t_max, step } => {
            let config = usage(load_config(common))?;
            pipeline::cmd_trajectory(&config, u, *t_max, *step)?;
        }
        Command::DemoDiamond { out, samples, burn_in, seed } => {
            pipeline::cmd_demo_diamond(out, *samples, *burn_in, *seed)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn usage<T>(result: Result<T>) -> Result<T> {
    config::mark_input(result)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run() {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            if err.downcast_ref::<config::InputError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
