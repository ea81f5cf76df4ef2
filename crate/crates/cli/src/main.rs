//! `hosim` — handover simulation from the command line.
//!
//! Five subcommands cover the full study pipeline: `gen-traces` synthesizes
//! a reproducible radio trace set, `run-baseline` evaluates the standards
//! handover (optionally sweeping its trigger grid), `train` fits the agent,
//! `eval` replays a checkpoint over a trace set, and `compare` joins a
//! baseline and an agent evaluation into side-by-side tables.
//!
//! Every command writes its outputs plus a `run.json` provenance record
//! (command, seed, input manifest digest, effective config) into the output
//! directory, so any result can be traced back to — and regenerated from —
//! the exact inputs that produced it.
//!
//! Exit codes are stable: 0 success, 1 runtime failure, 2 config
//! validation, 3 i/o, 4 incompatible inputs.

mod commands;
mod config;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::RunConfig;
use hosim_core::channel::{ChannelError, TraceError};
use hosim_core::env::EnvError;
use hosim_core::manifest::ManifestError;
use hosim_core::metrics::MetricsError;
use hosim_core::ppo::PpoError;

/// Top-level failure, bucketed by exit code.
#[derive(Debug)]
pub enum CliError {
    /// Exit 1: the run itself failed (divergence, metric breakdown).
    Runtime(String),
    /// Exit 2: the effective configuration is invalid.
    Config(String),
    /// Exit 3: reading or writing files failed.
    Io(String),
    /// Exit 4: inputs exist but do not fit together (checkpoint shape,
    /// trace manifest mismatch, unsupported format version).
    Incompatible(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Runtime(_) => 1,
            CliError::Config(_) => 2,
            CliError::Io(_) => 3,
            CliError::Incompatible(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Runtime(m)
            | CliError::Config(m)
            | CliError::Io(m)
            | CliError::Incompatible(m) => f.write_str(m),
        }
    }
}

impl From<ChannelError> for CliError {
    fn from(e: ChannelError) -> Self {
        // Placement failures are consequences of the layout/area settings.
        CliError::Config(e.to_string())
    }
}

impl From<TraceError> for CliError {
    fn from(e: TraceError) -> Self {
        match e {
            TraceError::Io(io) => CliError::Io(io.to_string()),
            other => CliError::Incompatible(other.to_string()),
        }
    }
}

impl From<EnvError> for CliError {
    fn from(e: EnvError) -> Self {
        match e {
            EnvError::InvalidConfig(_) => CliError::Config(e.to_string()),
            EnvError::EmptyDataset | EnvError::MixedCellCounts { .. } | EnvError::EmptyTrace { .. } => {
                CliError::Incompatible(e.to_string())
            }
            other => CliError::Runtime(other.to_string()),
        }
    }
}

impl From<PpoError> for CliError {
    fn from(e: PpoError) -> Self {
        match e {
            PpoError::InvalidConfig(_) => CliError::Config(e.to_string()),
            PpoError::Io(io) => CliError::Io(io.to_string()),
            PpoError::MalformedCheckpoint(_)
            | PpoError::UnsupportedVersion(_)
            | PpoError::DtypeMismatch { .. }
            | PpoError::ShapeMismatch(_) => CliError::Incompatible(e.to_string()),
            PpoError::Env(env) => env.into(),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

impl From<ManifestError> for CliError {
    fn from(e: ManifestError) -> Self {
        match e {
            ManifestError::Io(io) => CliError::Io(io.to_string()),
            other => CliError::Incompatible(other.to_string()),
        }
    }
}

impl From<MetricsError> for CliError {
    fn from(e: MetricsError) -> Self {
        CliError::Runtime(e.to_string())
    }
}

#[derive(Parser)]
#[command(
    name = "hosim",
    version,
    about = "Cellular handover simulation: trace synthesis, standards baseline, learned agent"
)]
struct Cli {
    /// TOML run configuration; defaults apply where the file is silent.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Master seed, overriding the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory, overriding the config file.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Per-item progress on stderr.
    #[arg(long, global = true)]
    verbose: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize radio traces plus their sha-256 manifest.
    GenTraces {
        /// Traces per speed class, overriding the config file.
        #[arg(long)]
        count: Option<usize>,
        /// Speed class in km/h; repeat for several (overrides the config).
        #[arg(long = "speed", value_name = "KMH")]
        speeds: Vec<f64>,
        /// Trace length in seconds, overriding the config file.
        #[arg(long, value_name = "S")]
        duration_s: Option<f64>,
    },
    /// Evaluate the standards baseline over a trace set.
    ///
    /// Without flags the trigger grid from the config is swept and the
    /// combination with the best mean rate ratio is reported; forcing
    /// --off-db and --ttt-ms skips the sweep.
    RunBaseline {
        /// Directory holding .trace files and manifest.json.
        #[arg(long, value_name = "DIR")]
        traces: PathBuf,
        /// Force the cell-individual offset, in dB (requires --ttt-ms).
        #[arg(long, value_name = "DB")]
        off_db: Option<f64>,
        /// Force the time-to-trigger, in ms (requires --off-db).
        #[arg(long, value_name = "MS")]
        ttt_ms: Option<u64>,
    },
    /// Train the handover agent on a trace set.
    Train {
        /// Directory holding .trace files and manifest.json.
        #[arg(long, value_name = "DIR")]
        traces: PathBuf,
        /// Total environment steps, overriding the config file.
        #[arg(long)]
        steps: Option<u64>,
        /// Fraction of the budget spent in curriculum phase 1.
        #[arg(long, value_name = "FRAC")]
        phase_split: Option<f64>,
        /// Updates between periodic checkpoints (0 disables them).
        #[arg(long, value_name = "N", default_value_t = 50)]
        checkpoint_every: u64,
        /// Directory for checkpoints; defaults to the output directory.
        #[arg(long, value_name = "DIR")]
        checkpoint_dir: Option<PathBuf>,
        /// Resume from a checkpoint written by an earlier run.
        #[arg(long, value_name = "FILE")]
        resume: Option<PathBuf>,
    },
    /// Replay a trained checkpoint over a trace set.
    Eval {
        /// Checkpoint file written by `train`.
        #[arg(long, value_name = "FILE")]
        checkpoint: PathBuf,
        /// Directory holding .trace files and manifest.json.
        #[arg(long, value_name = "DIR")]
        traces: PathBuf,
    },
    /// Join a baseline and an agent evaluation into comparison tables.
    ///
    /// Refuses to compare results produced from different trace sets.
    Compare {
        /// Output directory of a `run-baseline` invocation.
        #[arg(long, value_name = "DIR")]
        baseline: PathBuf,
        /// Output directory of an `eval` invocation.
        #[arg(long, value_name = "DIR")]
        agent: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = RunConfig::load(cli.config.as_deref())?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let out = cli.out.unwrap_or_else(|| PathBuf::from(&cfg.io.out_dir));
    let verbose = cli.verbose;

    match cli.command {
        Command::GenTraces { count, speeds, duration_s } => {
            commands::gen_traces::run(cfg, &out, count, speeds, duration_s, verbose)
        }
        Command::RunBaseline { traces, off_db, ttt_ms } => {
            commands::run_baseline::run(cfg, &out, &traces, off_db, ttt_ms, verbose)
        }
        Command::Train { traces, steps, phase_split, checkpoint_every, checkpoint_dir, resume } => {
            commands::train::run(
                cfg,
                &out,
                &traces,
                steps,
                phase_split,
                checkpoint_every,
                checkpoint_dir,
                resume,
                verbose,
            )
        }
        Command::Eval { checkpoint, traces } => {
            commands::eval::run(cfg, &out, &checkpoint, &traces, verbose)
        }
        Command::Compare { baseline, agent } => {
            commands::compare::run(cfg, &out, &baseline, &agent)
        }
    }
}
