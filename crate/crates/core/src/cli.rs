//! Command-line interface of the `dcc-sim` binary.

use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use crate::config::parse_config;
use crate::error::Result;
use crate::export::{aggregates_to_csv, export, report};

#[derive(Debug, Parser)]
#[command(
    name = "dcc-sim",
    version,
    about = "Decentralized congestion control simulator for V2X networks"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one scenario and export its results.
    Simulate {
        /// Scenario configuration (TOML).
        #[arg(long)]
        config: PathBuf,
        /// Overrides the seed in the configuration.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Recompute the aggregate tables of an export directory.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Run a scenario for a range of seeds, one output directory per seed.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Inclusive range such as `1..5`.
        #[arg(long)]
        seeds: SeedRange,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// Inclusive seed range `A..B`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedRange {
    pub first: u64,
    pub last: u64,
}

impl FromStr for SeedRange {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let (a, b) = s
            .split_once("..")
            .ok_or_else(|| format!("expected A..B, got `{s}`"))?;
        let parse = |v: &str| {
            v.trim()
                .parse::<u64>()
                .map_err(|e| format!("invalid seed `{v}`: {e}"))
        };
        let (first, last) = (parse(a)?, parse(b)?);
        if first > last {
            return Err(format!("empty seed range `{s}`"));
        }
        Ok(SeedRange { first, last })
    }
}

fn simulate(config: &Path, seed: Option<u64>, out: &Path) -> Result<()> {
    let mut cfg = parse_config(config)?;
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    let metrics = crate::engine::run(&cfg)?;
    export(&metrics, out)?;
    Ok(())
}

fn sweep(config: &Path, seeds: SeedRange, out: &Path) -> Result<()> {
    let base = parse_config(config)?;
    (seeds.first..=seeds.last)
        .into_par_iter()
        .map(|seed| {
            let mut cfg = base.clone();
            cfg.seed = seed;
            let metrics = crate::engine::run(&cfg)?;
            export(&metrics, &out.join(format!("seed_{seed}")))?;
            Ok(())
        })
        .collect::<Result<Vec<()>>>()?;
    Ok(())
}

fn print_report(input: &Path, format: Format) -> Result<()> {
    let aggregates = report(input)?;
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let written = match format {
        Format::Json => serde_json::to_writer_pretty(&mut out, &aggregates)
            .map_err(io::Error::from)
            .and_then(|()| writeln!(out)),
        Format::Csv => aggregates_to_csv(&aggregates, &mut out),
    };
    written.map_err(|e| crate::error::Error::io("<stdout>", e))
}

/// Runs the parsed command; errors are reported on stderr with exit code 1.
pub fn execute(cli: Cli) -> ExitCode {
    let result = match cli.command {
        Command::Simulate { config, seed, out } => simulate(&config, seed, &out),
        Command::Report { input, format } => print_report(&input, format),
        Command::Sweep { config, seeds, out } => sweep(&config, seeds, &out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
/// Usage errors exit with 2, help and version with 0.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => execute(cli),
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            ExitCode::from(code)
        }
    }
}
