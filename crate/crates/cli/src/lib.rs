//! `suptest`: batch runner over suptest-core. Every subcommand reads a JSON
//! config, writes hash-stamped CSV/JSON artifacts plus `manifest.json` into
//! the output directory, and is deterministic given the config and seed.

pub mod artifacts;
mod commands;
pub mod config;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_FINDING: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    /// A level violation or failed verification; details are in finding.json.
    #[error("finding: {0}")]
    Finding(String),
    #[error("{0}")]
    Run(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Finding(_) => EXIT_FINDING,
            CliError::Run(_) | CliError::Io(_) => EXIT_FAILURE,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "suptest", version, about = "Support-finiteness testing experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// JSON config file.
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the config's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory (overrides the config's `out`).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Expectation curve n ↦ E[A_n] of a test under a law.
    EvalTest(RunArgs),
    /// Build an adversarial infinite-support law against a test family.
    BuildAdversary(RunArgs),
    /// Re-check a built schedule against the per-rank bound.
    VerifyAdversary(RunArgs),
    /// Simulate one path of the uniform solution of Tsirelson's equation.
    SimulateTsirelson(RunArgs),
    /// Classify torus increment laws (Case 1/2/3).
    Classify(RunArgs),
    /// Reduce a path event to a test functional and evaluate it.
    ReduceEvent(RunArgs),
    /// Total-variation distance of a finite law and its leaky mixture.
    TvDemo(RunArgs),
}

/// Runs a parsed command line; returns the process exit code.
pub fn execute(cli: Cli) -> i32 {
    match dispatch(&cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("suptest: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(command: &Command) -> Result<(), CliError> {
    match command {
        Command::EvalTest(a) => commands::eval_test(&Ctx::load(a)?),
        Command::BuildAdversary(a) => commands::build_adversary(&Ctx::load(a)?),
        Command::VerifyAdversary(a) => commands::verify_adversary(&Ctx::load(a)?),
        Command::SimulateTsirelson(a) => commands::simulate_tsirelson(&Ctx::load(a)?),
        Command::Classify(a) => commands::classify(&Ctx::load(a)?),
        Command::ReduceEvent(a) => commands::reduce_event(&Ctx::load(a)?),
        Command::TvDemo(a) => commands::tv_demo(&Ctx::load(a)?),
    }
}

/// Raw config bytes plus the command-line overrides.
pub(crate) struct Ctx<'a> {
    pub args: &'a RunArgs,
    pub bytes: Vec<u8>,
}

impl<'a> Ctx<'a> {
    fn load(args: &'a RunArgs) -> Result<Self, CliError> {
        let bytes = std::fs::read(&args.config)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", args.config.display())))?;
        Ok(Self { args, bytes })
    }

    /// Resolves a path named inside the config against the config's directory.
    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            return p.to_path_buf();
        }
        self.args.config.parent().unwrap_or(Path::new(".")).join(p)
    }

    pub fn seed(&self, from_config: Option<u64>) -> u64 {
        self.args.seed.or(from_config).unwrap_or(0)
    }

    pub fn out_dir(&self, from_config: Option<&PathBuf>) -> PathBuf {
        match (&self.args.out, from_config) {
            (Some(o), _) => o.clone(),
            (None, Some(c)) => self.resolve(c),
            (None, None) => PathBuf::from("suptest-out"),
        }
    }
}
