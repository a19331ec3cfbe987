//! Batch runner for `perisem` experiments.
//!
//! Exit status: 0 when every check passes, 1 when a verification fails,
//! 2 on configuration or I/O errors.

pub mod commands;
pub mod config;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use perisem::{Error, Result};

pub use commands::Outcome;
pub use config::ExperimentConfig;

pub const THREADS_ENV: &str = "PERISEM_THREADS";

pub const EXIT_PASS: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "perisem", version, about = "Adaptive periodic-signal estimation experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Simulate coefficient estimates and jump records per replicate.
    Simulate(CommonArgs),
    /// Run the adaptive selection per replicate.
    Select(CommonArgs),
    /// Check the oracle inequality over the configured matrix.
    Verify(CommonArgs),
    /// Concatenate per-period segment CSVs into one path.
    Ingest(CommonArgs),
    /// Write the weight grid for each n.
    GridDump(CommonArgs),
}

#[derive(Args, Debug, Clone)]
pub struct CommonArgs {
    #[arg(long, value_name = "PATH")]
    pub config: PathBuf,
    /// Output directory; overrides `out` in the config.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Master seed; overrides `seed` in the config.
    #[arg(long, value_name = "U64")]
    pub seed: Option<u64>,
    /// Worker threads, 0 = one per core. Falls back to PERISEM_THREADS.
    #[arg(long, value_name = "N")]
    pub threads: Option<usize>,
}

/// `--threads` wins over the environment; unset means automatic.
pub fn resolve_threads(flag: Option<usize>, env: Option<&str>) -> Result<usize> {
    match (flag, env) {
        (Some(n), _) => Ok(n),
        (None, Some(v)) => v
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("{THREADS_ENV} must be a nonnegative integer, got {v:?}"))),
        (None, None) => Ok(0),
    }
}

fn init_threads(n: usize) -> Result<()> {
    if n == 0 {
        return Ok(());
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))
}

type Runner = fn(&ExperimentConfig, &std::path::Path) -> Result<Outcome>;

pub fn run(cli: Cli) -> Result<Outcome> {
    let (args, f): (&CommonArgs, Runner) = match &cli.command {
        Command::Simulate(a) => (a, commands::run_simulate),
        Command::Select(a) => (a, commands::run_select),
        Command::Verify(a) => (a, commands::run_verify),
        Command::Ingest(a) => (a, commands::run_ingest),
        Command::GridDump(a) => (a, commands::run_grid_dump),
    };
    let env = std::env::var(THREADS_ENV).ok();
    init_threads(resolve_threads(args.threads, env.as_deref())?)?;
    let mut cfg = ExperimentConfig::from_path(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let out = args
        .out
        .clone()
        .or_else(|| cfg.out.clone())
        .ok_or_else(|| Error::Config("no output directory: pass --out or set out".into()))?;
    f(&cfg, &out)
}

pub fn exit_code(result: &Result<Outcome>) -> i32 {
    match result {
        Ok(Outcome::Pass) => EXIT_PASS,
        Ok(Outcome::Fail) => EXIT_VERIFY_FAILED,
        Err(_) => EXIT_ERROR,
    }
}
