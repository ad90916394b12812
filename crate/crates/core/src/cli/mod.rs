//! Command-line frontend. Exit codes: 0 success, 2 configuration error,
//! 3 numerical failure, 4 internal invariant violation.

mod commands;
pub mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

pub use config::{Command, PotentialSpec, RunConfig, ScanAxis};

use crate::error::Error;

#[derive(Debug, Parser)]
#[command(name = "hstab", version, about = "Ground-state and stability diagnostics for radial pair potentials")]
pub struct Args {
    #[arg(value_enum)]
    pub command: Command,
    /// JSON run configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; overrides `output_dir` in the config.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Replaces the config's seed list with this single seed.
    #[arg(long)]
    pub seed_override: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numerical(String),
    Invariant(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Invariant(_) => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
            CliError::Invariant(m) => write!(f, "internal error: {m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvariantViolation(m) => CliError::Invariant(m),
            Error::InvalidPotential(_) | Error::InvalidArgument(_) => CliError::Config(e.to_string()),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

/// Parses and validates the config, then runs the command.
pub fn run(args: &Args) -> Result<String, CliError> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", args.config.display())))?;
    let mut cfg = RunConfig::parse(&text).map_err(CliError::Config)?;
    if let Some(seed) = args.seed_override {
        cfg.seeds = vec![seed];
    }
    cfg.validate(args.command).map_err(CliError::Config)?;
    let base_dir = args
        .config
        .parent()
        .map(|p| p.to_path_buf())
        .unwrap_or_default();
    let out = args.out.clone().unwrap_or_else(|| cfg.output_dir.clone());

    let go = || -> Result<String, CliError> {
        if args.command == Command::Scan {
            let out = commands::ensure_dir(&out)?;
            return commands::scan(&cfg, &base_dir, &out);
        }
        let p = cfg.potential.build(&base_dir).map_err(|e| CliError::Config(e.to_string()))?;
        let out = commands::ensure_dir(&out)?;
        match args.command {
            Command::Analyze => commands::analyze(&p, &cfg, &out),
            Command::Stability => commands::stability(&p, &cfg, &out),
            Command::Minimize => commands::minimize(&p, &cfg, &out),
            Command::Scan => unreachable!(),
        }
    };
    match args.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| CliError::Config(format!("--threads: {e}")))?
            .install(go),
        None => go(),
    }
}

pub fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(summary) => {
            print!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("hstab: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
