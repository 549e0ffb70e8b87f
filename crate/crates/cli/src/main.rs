//! `ruby-qsl`: lattice construction, sweeps, measurements, quench calibration
//! and dimer enumeration driven by a TOML run configuration.

mod commands;
mod config;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{Overrides, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("input error: {0}")]
    Input(String),
    #[error(transparent)]
    Core(#[from] ruby_qsl::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// 2: configuration or input, 3: capacity, 4: numerical, 1: anything else.
    pub fn exit_code(&self) -> u8 {
        use ruby_qsl::Error as E;
        match self {
            CliError::Config(_) | CliError::Input(_) => 2,
            CliError::Core(E::Capacity { .. }) => 3,
            CliError::Core(E::NonConvergence { .. } | E::NotHermitian(_)) => 4,
            CliError::Core(
                E::Lattice(_)
                | E::String(_)
                | E::UnknownTemplate(_)
                | E::InvalidArgument(_)
                | E::Parse(_)
                | E::DimensionMismatch { .. }
                | E::NotInBasis
                | E::OutOfRange { .. },
            ) => 2,
            CliError::Core(E::Io(_)) | CliError::Io { .. } => 1,
        }
    }
}

#[derive(Parser)]
#[command(name = "ruby-qsl", version, about = "Ruby-lattice Rydberg simulator and string-observable toolkit")]
struct Cli {
    /// Worker threads for parallel kernels.
    #[arg(long, global = true, env = "RUBY_QSL_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Run configuration (TOML).
    #[arg(long, short)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (else `output_dir`, else RUBY_QSL_OUTPUT_DIR, else `.`).
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Total sweep time for the `ed` schedule preset.
    #[arg(long)]
    omega_t: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Build the lattice, write it as JSON and print a summary.
    Lattice(Common),
    /// Run the preparation sweep to every endpoint.
    Sweep(Common),
    /// Evaluate the configured observables on states or snapshot files.
    Measure {
        #[command(flatten)]
        common: Common,
        #[arg(long = "state")]
        states: Vec<PathBuf>,
        #[arg(long = "snapshots")]
        snapshots: Vec<PathBuf>,
    },
    /// Scan the quench duration and tabulate the dual-loop parity.
    QuenchCalibrate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        state: Option<PathBuf>,
    },
    /// Enumerate dimer coverings.
    DimerEnum(Common),
}

fn load(c: &Common) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::load(&c.config)?;
    cfg.apply(&Overrides {
        seed: c.seed,
        output_dir: c.output_dir.clone(),
        omega_t: c.omega_t,
        dt: c.dt,
    })?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    match cli.command {
        Command::Lattice(c) => commands::lattice(&load(&c)?),
        Command::Sweep(c) => commands::sweep(&load(&c)?),
        Command::Measure {
            common,
            states,
            snapshots,
        } => commands::measure(&load(&common)?, &states, &snapshots),
        Command::QuenchCalibrate { common, state } => commands::quench_calibrate(&load(&common)?, state.as_deref()),
        Command::DimerEnum(c) => commands::dimer_enum(&load(&c)?),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
