//! Config-driven front end behind the `identikit` binary.
//!
//! Every command reads one JSON config (see [`config::RunConfig`]), builds
//! the model at a coarse and a fine resolution, and writes its reports into
//! the output directory. Exit codes: 0 success, 2 configuration or input
//! error, 3 identification error, 4 numerical failure.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::error::Error;

mod build;
mod commands;
pub mod config;
pub mod svg;

pub use build::{build_mesh, Mesh, MeshSummary, Resolution};
pub use commands::{cmd_diagnose, cmd_dump_operator, cmd_estimate, cmd_path, cmd_rates};
pub use config::{RunConfig, SCHEMA};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_IDENTIFICATION: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "identikit", version, about = "Identification diagnostics for semiparametric models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Classify functionals, compute Fisher information, write spectra and plots.
    Diagnose(Common),
    /// Solve the adjoint equation and evaluate the moment estimator.
    Estimate {
        #[command(flatten)]
        common: Common,
        /// Simulate this many observations from the model instead of reading data.
        #[arg(long)]
        simulate: Option<usize>,
    },
    /// Monte Carlo convergence rate of the moment estimator.
    Rates(Common),
    /// Perturbation path bounding the attainable rate.
    Path(Common),
    /// Write the discretized operators in the binary container format.
    DumpOperator(Common),
}

#[derive(Debug, Args)]
pub struct Common {
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the config's output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overrides the config's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; defaults to all cores.
    #[arg(long, env = "IDENTIKIT_THREADS")]
    pub threads: Option<usize>,
}

/// Exit code for an error.
pub fn exit_code(e: &Error) -> i32 {
    if e.is_identification() {
        return EXIT_IDENTIFICATION;
    }
    match e {
        Error::InvalidInput(_)
        | Error::DimensionMismatch(_)
        | Error::OddGrid
        | Error::NotAbsolutelyContinuous
        | Error::GridDoesNotCover { .. }
        | Error::Container(_)
        | Error::PathLeavesModel { .. } => EXIT_CONFIG,
        _ => EXIT_NUMERICAL,
    }
}

fn resolve(common: &Common, simulate: Option<usize>) -> crate::Result<RunConfig> {
    let mut cfg = RunConfig::load(&common.config)?;
    if let Some(out) = &common.out {
        cfg.out = out.clone();
    }
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(n) = simulate {
        cfg.estimate.simulate = Some(n);
        cfg.estimate.data = None;
    }
    Ok(cfg)
}

fn dispatch(cli: Cli) -> crate::Result<()> {
    let (common, run): (&Common, fn(&RunConfig) -> crate::Result<()>) = match &cli.command {
        Command::Diagnose(c) => (c, cmd_diagnose),
        Command::Estimate { common, .. } => (common, cmd_estimate),
        Command::Rates(c) => (c, cmd_rates),
        Command::Path(c) => (c, cmd_path),
        Command::DumpOperator(c) => (c, cmd_dump_operator),
    };
    let simulate = match &cli.command {
        Command::Estimate { simulate, .. } => *simulate,
        _ => None,
    };
    let cfg = resolve(common, simulate)?;
    if let Some(n) = common.threads {
        if n == 0 {
            return Err(Error::invalid("--threads must be at least 1"));
        }
        // a pool may already exist when called twice in one process
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    run(&cfg)
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("identikit: {e}");
            exit_code(&e)
        }
    }
}
