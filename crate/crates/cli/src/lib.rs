//! Command-line driver: experiment configs, subcommands and run manifests.

pub mod config;
mod commands;

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::Value;

pub use config::ExperimentConfig;

pub const VERSION: &str = concat!("v", env!("CARGO_PKG_VERSION"), "-", env!("SHOTNOISE_DESCRIBE"));

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] shotnoise_core::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CliError {
    /// 2 for usage and parameter errors, 3 for numerical failures, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        use shotnoise_core::Error as E;
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(e) => match e {
                E::Parameter(_) | E::Capability(_) | E::Format(_) | E::Infeasible { .. } => 2,
                E::Accuracy { .. }
                | E::Resolution(_)
                | E::Integrability(_)
                | E::Degenerate { .. }
                | E::Tracking { .. }
                | E::Window { .. } => 3,
                _ => 1,
            },
            CliError::Io(_) | CliError::Json(_) => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "shotnoise", version = VERSION, about = "Smooth shot noise experiments")]
pub struct Cli {
    /// TOML experiment configuration.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Override a configuration key, e.g. `--set simulate.intensity=2`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Sample paths and their derivatives.
    Simulate,
    /// Monte Carlo level-crossing curve.
    Crossings,
    /// Fourier-route crossing curve, its inversion and bound tables.
    Spectral,
    /// Extrema rates, tracks, scaling and semigroup checks.
    Scalespace,
    /// Run the acceptance suites.
    Verify {
        /// `quick` or `full`.
        #[arg(long)]
        profile: Option<String>,
        /// Comma-separated suite numbers.
        #[arg(long, value_delimiter = ',')]
        suites: Option<Vec<u32>>,
    },
    /// Print the resolved configuration as TOML.
    Config,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Crossings => "crossings",
            Command::Spectral => "spectral",
            Command::Scalespace => "scalespace",
            Command::Verify { .. } => "verify",
            Command::Config => "config",
        }
    }
}

/// Result of a subcommand: the manifest payload and whether every check passed.
pub struct Outcome {
    pub pass: bool,
    pub results: Value,
    pub timings: BTreeMap<String, f64>,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    command: &'a str,
    version: &'a str,
    seed: u64,
    config: &'a ExperimentConfig,
    pass: bool,
    results: Value,
    wall_seconds: BTreeMap<String, f64>,
}

/// Resolves the configuration from file, overrides and flags.
pub fn resolve(cli: &Cli) -> Result<ExperimentConfig, CliError> {
    let mut sets = cli.set.clone();
    if let Command::Verify { profile, suites } = &cli.command {
        if let Some(p) = profile {
            sets.push(format!("verify.profile=\"{p}\""));
        }
        if let Some(s) = suites {
            let list: Vec<String> = s.iter().map(u32::to_string).collect();
            sets.push(format!("verify.suites=[{}]", list.join(",")));
        }
    }
    let mut cfg = ExperimentConfig::load(cli.config.as_deref(), &sets)?;
    if let Some(s) = cli.seed {
        cfg.master_seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.out = o.clone();
    }
    if let Some(t) = cli.threads {
        cfg.threads = t;
    }
    Ok(cfg)
}

/// Runs the parsed command and writes `manifest.json`; returns the process exit code.
pub fn run(cli: Cli) -> Result<i32, CliError> {
    let cfg = resolve(&cli)?;
    if let Command::Config = cli.command {
        print!("{}", cfg.to_toml());
        return Ok(0);
    }
    if cfg.threads > 0 {
        // a pool already built by an earlier call in this process is kept
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cfg.threads).build_global();
    }
    std::fs::create_dir_all(&cfg.out)?;
    let start = Instant::now();
    let mut outcome = match &cli.command {
        Command::Simulate => commands::simulate(&cfg)?,
        Command::Crossings => commands::crossings(&cfg)?,
        Command::Spectral => commands::spectral(&cfg)?,
        Command::Scalespace => commands::scalespace(&cfg)?,
        Command::Verify { .. } => commands::verify(&cfg)?,
        Command::Config => unreachable!(),
    };
    outcome.timings.insert("total".into(), start.elapsed().as_secs_f64());
    let manifest = Manifest {
        command: cli.command.name(),
        version: VERSION,
        seed: cfg.master_seed,
        config: &cfg,
        pass: outcome.pass,
        results: outcome.results,
        wall_seconds: outcome.timings,
    };
    serde_json::to_writer_pretty(create(&cfg.out, "manifest.json")?, &manifest)?;
    Ok(if outcome.pass { 0 } else { 1 })
}

pub(crate) fn create(dir: &Path, name: &str) -> Result<BufWriter<File>, CliError> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}
