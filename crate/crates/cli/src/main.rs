use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::{Parser, ValueEnum};

mod config;
mod drivers;
mod output;

use config::{Mode, RawConfig};
use output::OutputDir;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    /// Exact cooperation frequencies of the well-mixed finite population.
    Finite,
    /// Fixed points, flow curves and trajectories of the replicator equation.
    Replicator,
    /// Agent-based simulations on lattices, scale-free or complete graphs.
    Abm,
}

/// Cooperation dynamics of humans alongside fixed-behavior AI agents.
#[derive(Debug, Parser)]
#[command(name = "simulate", version)]
struct Cli {
    #[arg(value_enum)]
    mode: ModeArg,
    /// Experiment file of `key = value` lines.
    #[arg(long)]
    config: PathBuf,
    /// Directory receiving every output file.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Master seed; overrides `seed` in the config file.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (defaults to the number of processors).
    #[arg(long)]
    workers: Option<usize>,
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

fn run(cli: Cli) -> Result<()> {
    let mode = match cli.mode {
        ModeArg::Finite => Mode::Finite,
        ModeArg::Replicator => Mode::Replicator,
        ModeArg::Abm => Mode::Abm,
    };
    let experiment = config::resolve(RawConfig::load(&cli.config)?, mode, cli.seed)?;

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.workers {
        if n == 0 {
            bail!("--workers must be at least 1");
        }
        pool = pool.num_threads(n);
    }
    let pool = pool.build()?;

    let dir = OutputDir::create(&cli.out)?;
    let files = pool.install(|| drivers::run(&experiment, &dir))?;
    println!(
        "{} run complete: {} files in {}",
        mode.name(),
        files.len() + 1,
        cli.out.display()
    );
    Ok(())
}
