//! Batch driver for the elastic grating solvers.
//!
//! ```text
//! elastic-grating <subcommand> --config run.cfg [--out DIR] [--seed N]
//! ```
//!
//! Exit status: 0 success, 2 config error, 3 numerical failure, 4 a checked
//! bound or tolerance was violated. Failures print one line
//! `error: <category>: <message>` on stderr.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use serde_json::{Map, Value};

use config::{RawConfig, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(String),
    #[error("numerical: {0}")]
    Numerical(String),
    #[error("bound-violation: {0}")]
    Violation(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Violation(_) => 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Subcommand {
    /// Mode table for the configured window.
    Modes,
    /// Flat-surface exact solution and its efficiencies.
    Exact,
    /// DtN operator against tractions of random potentials.
    DtnCheck,
    /// Closed-form PML DtN matrix against the layer system.
    PmlCheck,
    /// Operator gap against its analytic bound.
    Bounds,
    /// Per-mode 1D solve with a mesh convergence table.
    Solve1d,
    /// 3D finite element solve and efficiencies.
    Solve3d,
    /// Convergence tables over PML strength.
    Sweep,
}

#[derive(Debug, Parser)]
#[command(version, about = "PML and DtN solvers for elastic scattering by biperiodic rigid surfaces")]
struct Args {
    subcommand: Subcommand,
    /// Run configuration, flat `section.key = value` lines.
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Seed for randomized checks; overrides the `seed` key.
    #[arg(long)]
    seed: Option<u64>,
}

fn run(args: &Args) -> Result<Vec<String>, CliError> {
    let cfg = RunConfig::build(RawConfig::load(&args.config)?, args.seed)?;
    let arts = match args.subcommand {
        Subcommand::Modes => commands::modes(&cfg),
        Subcommand::Exact => commands::exact(&cfg),
        Subcommand::DtnCheck => commands::dtn_check(&cfg),
        Subcommand::PmlCheck => commands::pml_check(&cfg),
        Subcommand::Bounds => commands::bounds(&cfg),
        Subcommand::Solve1d => commands::solve1d(&cfg),
        Subcommand::Solve3d => commands::solve3d(&cfg),
        Subcommand::Sweep => commands::sweep(&cfg),
    }?;
    let name = args.subcommand.to_possible_value().expect("no skipped variants");
    let mut head = Map::new();
    head.insert("subcommand".into(), Value::from(name.get_name()));
    head.insert("version".into(), Value::from(env!("CARGO_PKG_VERSION")));
    head.insert("seed".into(), Value::from(cfg.seed));
    let inputs = cfg.resolved.iter().map(|(k, v)| (k.clone(), Value::from(v.clone()))).collect();
    head.insert("config".into(), Value::Object(inputs));
    arts.write(&args.out, head)?;
    if let Some(v) = arts.violation {
        for line in &arts.report {
            println!("{line}");
        }
        return Err(CliError::Violation(v));
    }
    Ok(arts.report)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("bad arguments").trim_start_matches("error: ");
            eprintln!("error: config: {first}");
            return ExitCode::from(2);
        }
    };
    match run(&args) {
        Ok(report) => {
            for line in report {
                println!("{line}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {}", e.to_string().replace('\n', " "));
            ExitCode::from(e.exit_code())
        }
    }
}
