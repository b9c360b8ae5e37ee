//! `steercert` — steering-based certification pipeline driver.
//!
//! Subcommands orchestrate the library end to end and emit CSV/JSON data for
//! external plotting. Every command is deterministic given (config, seed):
//! repeated runs produce byte-identical outputs. Exit codes: 0 success,
//! 1 I/O error, 2 config error, 3 not-steerable refusal, 4 internal
//! invariant failure.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{FidelityConvention, RunConfig};

#[derive(Debug)]
pub enum CliError {
    Io(String),
    Config(String),
    NotSteerable(String),
    Internal(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Io(_) => 1,
            CliError::Config(_) => 2,
            CliError::NotSteerable(_) => 3,
            CliError::Internal(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Io(m) | CliError::Config(m) | CliError::NotSteerable(m) | CliError::Internal(m) => m,
        }
    }
}

impl From<steercert::Error> for CliError {
    fn from(e: steercert::Error) -> Self {
        match e {
            steercert::Error::NotSteerable { .. } => CliError::NotSteerable(e.to_string()),
            other => CliError::Internal(other.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "steercert",
    version,
    about = "Steering-based certification of pure two-qubit entangled states: \
             FGSI scans, certification, robustness bounds, no-signaling tests, \
             and simulated coincidence counting"
)]
struct Cli {
    /// JSON run configuration; defaults are used when absent.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override the configuration seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Override the output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Override the fidelity convention used in single-fidelity columns.
    #[arg(long, global = true, value_enum)]
    fidelity: Option<FidelityConvention>,

    /// Override the coincidences per setting pair.
    #[arg(long, global = true)]
    n: Option<u64>,

    /// Override the Monte Carlo repetition count.
    #[arg(long, global = true)]
    reps: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// FGSI value curves over the state coefficient, phase, and measurement
    /// angle (exact plus sampled columns).
    ScanFgsi,
    /// Run the certification pipeline per configured state, or replay an
    /// external statistics JSON.
    Certify {
        /// Replay a SteeringStatistics JSON file instead of simulating.
        #[arg(long)]
        stats: Option<PathBuf>,
    },
    /// Fidelity-versus-bound sweep with operator-inequality margin grids and
    /// extractability estimates.
    Robustness,
    /// Marginal-comparison z-tests between Alice's settings.
    Nosignal,
    /// Emit raw coincidence-count tables.
    Simulate {
        /// Also emit tomography-basis counts per state.
        #[arg(long)]
        tomo: bool,
    },
    /// Reconstruct a state from a tomography counts CSV.
    Tomography {
        /// Counts CSV over the nine Pauli basis pairs (indices 0..2 on each side).
        counts: PathBuf,
        /// Target family tag for the fidelity column.
        #[arg(long)]
        family: Option<String>,
        /// Target state coefficient.
        #[arg(long)]
        a: Option<f64>,
        /// Target phase (phi_delta only).
        #[arg(long)]
        delta: Option<f64>,
    },
    /// Fast invariant suite; nonzero exit on any failure.
    Selfcheck,
}

fn apply_thread_cap() {
    if let Ok(v) = std::env::var("STEERCERT_THREADS") {
        if let Ok(threads) = v.trim().parse::<usize>() {
            if threads >= 1 {
                // ignore failure: the global pool may already exist
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(threads)
                    .build_global();
            }
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.out_dir = out.display().to_string();
    }
    if let Some(f) = cli.fidelity {
        cfg.fidelity_convention = f;
    }
    if let Some(n) = cli.n {
        cfg.n_per_setting = n;
    }
    if let Some(reps) = cli.reps {
        cfg.reps = reps;
    }
    cfg.validate()?;

    match cli.command {
        Command::ScanFgsi => commands::scan_fgsi::run(&cfg),
        Command::Certify { stats } => commands::certify::run(&cfg, stats.as_deref()),
        Command::Robustness => commands::robustness::run(&cfg),
        Command::Nosignal => commands::nosignal::run(&cfg),
        Command::Simulate { tomo } => commands::simulate::run(&cfg, tomo),
        Command::Tomography {
            counts,
            family,
            a,
            delta,
        } => commands::tomography::run(&cfg, &counts, family.as_deref(), a, delta),
        Command::Selfcheck => commands::selfcheck::run(),
    }
}

fn main() -> ExitCode {
    apply_thread_cap();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}
