//! Command-line front end for the water analysis toolkit.
//!
//! One binary, one subcommand per workflow stage. Machine-readable JSON
//! goes to standard output; `--pretty` swaps in human tables; warnings
//! and errors go to standard error.
//!
//! Exit codes: 0 success, 1 usage, 2 unreadable or malformed input,
//! 3 degenerate data (nothing to compute on).

mod commands;
mod config;

use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

pub use config::FileConfig;

#[derive(Debug, Parser)]
#[command(
    name = "waterscope",
    version,
    about = "Inland water analysis for six-band multispectral scenes",
    propagate_version = true
)]
pub struct Cli {
    /// Human-readable tables instead of JSON on standard output
    #[arg(long, global = true)]
    pub pretty: bool,

    /// JSON file supplying defaults for long flags; explicit flags win
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Worker threads; overrides the WATERSCOPE_THREADS variable
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute a spectral index map from a scene
    Index(commands::IndexArgs),
    /// Threshold an index map into a water mask
    Segment(commands::SegmentArgs),
    /// Water variability statistics and depth profiles
    Stats(commands::StatsArgs),
    /// Score predictions against a reference mask
    Eval(commands::EvalArgs),
    /// Draw water-biased training patches from a scene
    Sample(commands::SampleArgs),
    /// Render maps and mask overlays as PNG
    Render(commands::RenderArgs),
    /// Generate a synthetic test scene
    #[command(hide = true)]
    Synth(commands::SynthArgs),
}

#[derive(Debug)]
pub enum CmdError {
    Usage(String),
    Core(waterscope::Error),
}

impl From<waterscope::Error> for CmdError {
    fn from(e: waterscope::Error) -> Self {
        CmdError::Core(e)
    }
}

impl CmdError {
    fn report(&self) -> i32 {
        match self {
            CmdError::Usage(msg) => {
                eprintln!("error: {msg}");
                1
            }
            CmdError::Core(e) => {
                eprintln!("error: {e}");
                if e.is_degenerate() {
                    3
                } else {
                    2
                }
            }
        }
    }
}

fn usage(msg: impl Into<String>) -> CmdError {
    CmdError::Usage(msg.into())
}

/// Shared per-invocation state handed to every subcommand.
pub struct Ctx {
    pub pretty: bool,
    pub cfg: FileConfig,
}

pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => e.report(),
    }
}

fn execute(cli: Cli) -> Result<(), CmdError> {
    let cfg = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    configure_threads(cli.threads.or(cfg.threads).or_else(env_threads));
    let ctx = Ctx {
        pretty: cli.pretty || cfg.pretty.unwrap_or(false),
        cfg,
    };
    match cli.command {
        Command::Index(args) => commands::index(args, &ctx),
        Command::Segment(args) => commands::segment(args, &ctx),
        Command::Stats(args) => commands::stats(args, &ctx),
        Command::Eval(args) => commands::eval(args, &ctx),
        Command::Sample(args) => commands::sample(args, &ctx),
        Command::Render(args) => commands::render(args, &ctx),
        Command::Synth(args) => commands::synth(args, &ctx),
    }
}

fn env_threads() -> Option<usize> {
    let raw = std::env::var("WATERSCOPE_THREADS").ok()?;
    match raw.trim().parse::<usize>() {
        Ok(n) if n > 0 => Some(n),
        _ => {
            eprintln!("warning: ignoring WATERSCOPE_THREADS={raw:?}");
            None
        }
    }
}

fn configure_threads(threads: Option<usize>) {
    if let Some(n) = threads {
        if n > 0 {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global();
        }
    }
}
