mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use commands::Overrides;

/// Skipping sampler experiments.
#[derive(Parser)]
#[command(name = "skipping", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for independent runs (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the sampler described by a TOML configuration.
    Sample {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        steps: Option<usize>,
        /// Tune the Gaussian proposal scale for the configured RWM acceptance rate.
        #[arg(long)]
        tune: bool,
        #[command(flatten)]
        common: Common,
    },
    /// RWM against the skipping sampler in the tail of a random Gaussian mixture.
    TailExperiment {
        #[arg(long, value_parser = ["2", "50"])]
        dim: String,
        #[arg(long, default_value_t = 100_000)]
        steps: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Multistart with plain, RWM-improved and MSS-improved starting points on eggholder.
    Table1 {
        #[arg(long, default_value_t = 1000)]
        runs: usize,
        /// Chain steps per starting point.
        #[arg(long, default_value_t = 100)]
        m: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Classic, monotonic and MSS basin-hopping on eggholder.
    Table2 {
        #[arg(long, default_value_t = 1000)]
        runs: usize,
        /// Basin-hopping iterations per run.
        #[arg(long, default_value_t = 100)]
        m: usize,
        #[command(flatten)]
        common: Common,
    },
}

fn set_threads(threads: Option<usize>) -> Result<()> {
    if let Some(n) = threads {
        if n == 0 {
            bail!("--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the worker pool")?;
    }
    Ok(())
}

fn out_dir(common: &Common) -> PathBuf {
    common.out.clone().unwrap_or_else(|| PathBuf::from("out"))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Sample {
            config,
            steps,
            tune,
            common,
        } => {
            set_threads(common.threads)?;
            let o = Overrides {
                seed: common.seed,
                steps,
                out: common.out,
                tune,
            };
            commands::sample(&config, &o)
        }
        Command::TailExperiment { dim, steps, common } => {
            set_threads(common.threads)?;
            if steps == 0 {
                bail!("--steps must be at least 1");
            }
            let dim: usize = dim.parse()?;
            commands::tail_experiment(dim, common.seed.unwrap_or(0), steps, &out_dir(&common))
        }
        Command::Table1 { runs, m, common } => {
            set_threads(common.threads)?;
            commands::run_table1(runs, m, common.seed.unwrap_or(0), &out_dir(&common))
        }
        Command::Table2 { runs, m, common } => {
            set_threads(common.threads)?;
            commands::run_table2(runs, m, common.seed.unwrap_or(0), &out_dir(&common))
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
