//! Batch front-end for the `qnet` toolkit.

pub mod commands;
pub mod config;
pub mod output;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use commands::{run, Command, Outcome};
pub use config::RunConfig;

pub const EXIT_OK: i32 = 0;
pub const EXIT_EXPECTATION: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "qnet", version, about = "Design, verify and attack reward mechanisms on query networks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Cmd,
}

#[derive(Debug, clap::Args)]
pub struct Common {
    /// JSON run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory, overriding `output_dir`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Override a config leaf, e.g. `--set sim.seed=42`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Subcommand)]
pub enum Cmd {
    /// Sweep the property suite and write property_report.csv.
    Check(Common),
    /// Rebuild the mechanism forced by the base condition.
    Derive(Common),
    /// Run truthful episodes and write episodes.csv.
    Simulate(Common),
    /// Audit strategic deviations on simulated episodes.
    Attack(Common),
    /// Grid search for the cheapest time-critical table.
    Mincost(Common),
}

impl Cmd {
    fn split(&self) -> (Command, &Common) {
        match self {
            Cmd::Check(c) => (Command::Check, c),
            Cmd::Derive(c) => (Command::Derive, c),
            Cmd::Simulate(c) => (Command::Simulate, c),
            Cmd::Attack(c) => (Command::Attack, c),
            Cmd::Mincost(c) => (Command::MinCost, c),
        }
    }
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let (cmd, common) = cli.command.split();
    let result = RunConfig::load(common.config.as_deref(), &common.overrides).and_then(|mut cfg| {
        if let Some(out) = &common.out {
            cfg.output_dir = Some(out.clone());
        }
        run(cmd, &cfg)
    });
    match result {
        Ok(o) if o.expectations_met => EXIT_OK,
        Ok(_) => EXIT_EXPECTATION,
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_USAGE
        }
    }
}
