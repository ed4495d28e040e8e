//! `ellid`: obstacle identification, tracking and closed-loop runs from the
//! command line.
//!
//! Exit codes: 0 success, 1 internal failure, 2 input error, 3 empty input,
//! 4 episode ended in a collision.

mod commands;
mod config;
mod error;
mod input;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{Overrides, RunConfig};
use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "ellid", version, about = "Ellipse obstacle identification, tracking and avoidance")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// TOML run configuration; unknown keys are rejected.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Directory for output files; CSV goes to stdout without it.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Also render SVG figures (needs --out).
    #[arg(long, global = true)]
    svg: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit obstacle ellipses to a point file.
    Identify { points: PathBuf },
    /// Track ellipses through a directory of timestamped point files.
    Track { frames: PathBuf },
    /// Run a closed-loop episode on a scenario file or built-in map (map1..map5).
    Run { scenario: String },
    /// Identification timing and time-to-goal per map and pipeline.
    Bench {
        /// Comma-separated built-in map numbers.
        #[arg(long, value_delimiter = ',')]
        maps: Option<Vec<usize>>,
        #[arg(long)]
        reps: Option<usize>,
    },
    /// Write sampled points of a scenario, as one file or a frame directory.
    Sample {
        scenario: String,
        /// Time of the first sample, seconds.
        #[arg(long, default_value_t = 0.0)]
        time: f64,
        /// Number of frames to write into --out.
        #[arg(long)]
        frames: Option<usize>,
    },
}

fn run(cli: Cli) -> Result<u8, CliError> {
    let flags = Overrides {
        config: cli.common.config,
        seed: cli.common.seed,
        out: cli.common.out,
        svg: cli.common.svg,
    };
    let mut cfg = RunConfig::load(&flags)?;
    match cli.command {
        Command::Identify { points } => commands::cmd_identify(&points, &cfg)?,
        Command::Track { frames } => commands::cmd_track(&frames, &cfg)?,
        Command::Run { scenario } => {
            if commands::cmd_run(&scenario, &cfg)?.collisions > 0 {
                return Ok(4);
            }
        }
        Command::Bench { maps, reps } => {
            if let Some(maps) = maps {
                cfg.bench.maps = maps;
            }
            if let Some(reps) = reps {
                cfg.bench.reps = reps;
            }
            commands::cmd_bench(&cfg)?;
        }
        Command::Sample { scenario, time, frames } => commands::cmd_sample(&scenario, time, frames, &cfg)?,
    }
    Ok(0)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("ELLID_LOG", "warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("ellid: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
