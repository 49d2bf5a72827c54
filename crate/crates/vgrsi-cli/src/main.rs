//! `vgrsi`: indicator dumps, fixed-parameter backtests, walk-forward
//! optimization, and summary reporting, driven by a single TOML config.

mod commands;
mod config;
mod outputs;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use crate::config::RunConfig;

#[derive(Parser)]
#[command(name = "vgrsi", version, about = "Visibility-graph RSI toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Run configuration (TOML); relative paths inside it resolve against
    /// its directory.
    #[arg(long, value_name = "PATH")]
    config: PathBuf,

    /// Output directory; overrides `[output] dir`.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Search seed; overrides `[walkforward] seed`.
    #[arg(long, value_name = "INT")]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Dump the rolling indicator for one timeframe as vgrsi.csv.
    Indicator(CommonArgs),
    /// Simulate fixed strategy parameters; write trade, equity, signal, and
    /// stats artifacts.
    Backtest(CommonArgs),
    /// Optimize per window and trade out-of-sample; write per-window
    /// results, the cumulative curve, and a rerun manifest.
    Walkforward(CommonArgs),
    /// Aggregate a walk-forward manifest into the summary table.
    Report(CommonArgs),
}

impl Command {
    fn args(&self) -> &CommonArgs {
        match self {
            Command::Indicator(a)
            | Command::Backtest(a)
            | Command::Walkforward(a)
            | Command::Report(a) => a,
        }
    }
}

fn main() -> ExitCode {
    match dispatch(&Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: &Cli) -> Result<()> {
    let args = cli.command.args();
    let mut config = RunConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        if let Some(wf) = config.walkforward.as_mut() {
            wf.seed = seed;
        }
    }
    // The seed every manifest records: the flag, else the configured search
    // seed, else zero for the deterministic subcommands.
    let seed = args
        .seed
        .or(config.walkforward.as_ref().map(|wf| wf.seed))
        .unwrap_or(0);

    let out_dir = args
        .out
        .clone()
        .unwrap_or_else(|| config.output.dir.clone());
    fs::create_dir_all(&out_dir)
        .with_context(|| format!("creating output directory {}", out_dir.display()))?;

    match cli.command {
        Command::Indicator(_) => commands::cmd_indicator(&config, &out_dir, seed),
        Command::Backtest(_) => commands::cmd_backtest(&config, &out_dir, seed),
        Command::Walkforward(_) => commands::cmd_walkforward(&config, &out_dir),
        Command::Report(_) => commands::cmd_report(&config, &out_dir),
    }
}
