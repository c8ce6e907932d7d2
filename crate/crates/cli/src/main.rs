//! `qgnn`: toy data generation, graph building, training, evaluation and
//! circuit listings.
//!
//! Exit codes: 0 success, 1 usage, 2 data error, 3 numeric failure.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::parser::ValueSource;
use clap::{ArgMatches, Args, CommandFactory, FromArgMatches, Parser, Subcommand};

use qgnn_core::circuits::AnsatzKind;
use qgnn_core::graphbuild::SectorAxis;

/// Invalid arguments or configuration.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

#[derive(Parser, Debug)]
#[command(
    name = "qgnn",
    version,
    about = "Edge classification of particle hit graphs with quantum graph networks"
)]
pub struct Cli {
    /// Cap on worker threads (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// JSON run configuration; flags given on the command line override it
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate toy helix events in TrackML CSV layout
    GenToy(GenToyArgs),
    /// Select barrel hits, build doublet graphs and write one file per slice
    BuildGraphs(BuildArgs),
    /// Train repeated runs and write histories, checkpoints and reports
    Train(TrainArgs),
    /// Score a checkpoint on the validation graphs
    Evaluate(EvaluateArgs),
    /// Print the gate list and parameter count of an ansatz
    Describe(DescribeArgs),
}

#[derive(Args, Debug)]
pub struct GenToyArgs {
    /// Output directory for event CSVs
    #[arg(long, default_value = "data")]
    pub out: PathBuf,
    /// Number of events
    #[arg(long, default_value_t = 100)]
    pub events: usize,
    /// Id of the first event
    #[arg(long, default_value_t = 0)]
    pub first_event: u64,
    /// Particles per event
    #[arg(long, default_value_t = 50)]
    pub particles: usize,
    /// Lowest generated transverse momentum, GeV
    #[arg(long, default_value_t = 1.0)]
    pub pt_min: f64,
    /// Highest generated transverse momentum, GeV
    #[arg(long, default_value_t = 10.0)]
    pub pt_max: f64,
    /// Comma-separated barrel layer radii, mm
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "32,72,116,172,260,360,500,660,820,1020"
    )]
    pub radii: Vec<f64>,
    /// Solenoid field, tesla
    #[arg(long, default_value_t = 2.0)]
    pub field: f64,
    /// Unmatched hits added per layer
    #[arg(long, default_value_t = 0)]
    pub noise: usize,
    /// Generator seed
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug)]
pub struct BuildArgs {
    /// Directory with event CSVs
    #[arg(long, default_value = "data")]
    pub data: PathBuf,
    /// Output directory for graph files
    #[arg(long, default_value = "graphs")]
    pub out: PathBuf,
    /// Sectors along the slicing axis
    #[arg(long, default_value_t = 8)]
    pub n_phi: usize,
    /// Uniform z bins
    #[arg(long, default_value_t = 2)]
    pub n_z: usize,
    /// Slicing axis
    #[arg(long, value_enum, default_value = "phi")]
    pub axis: AxisArg,
    /// Minimum transverse momentum, GeV
    #[arg(long, default_value_t = 1.0)]
    pub pt_min: f64,
    /// Maximum |Δφ/Δr| of a doublet, 1/mm
    #[arg(long, default_value_t = 0.0006)]
    pub dphi_slope_max: f64,
    /// Maximum |z0| of a doublet, mm
    #[arg(long, default_value_t = 100.0)]
    pub z0_max: f64,
}

#[derive(clap::ValueEnum, Clone, Copy, Debug)]
pub enum AxisArg {
    Phi,
    Eta,
}

impl From<AxisArg> for SectorAxis {
    fn from(a: AxisArg) -> Self {
        match a {
            AxisArg::Phi => SectorAxis::Phi,
            AxisArg::Eta => SectorAxis::Eta,
        }
    }
}

#[derive(Args, Debug)]
pub struct ModelArgs {
    /// Ansatz of the edge and node networks: mps, ttn or mera
    #[arg(long, default_value = "ttn")]
    pub ansatz: AnsatzKind,
    /// Hidden node features
    #[arg(long, default_value_t = 1)]
    pub n_hidden: usize,
    /// Edge/node iterations before the output edge pass
    #[arg(long, default_value_t = 1)]
    pub n_iterations: usize,
    /// Replace the quantum blocks by perceptrons
    #[arg(long)]
    pub classical: bool,
    /// Estimate readouts from this many shots instead of exact expectations
    #[arg(long)]
    pub shots: Option<u32>,
    /// Seed of the shot sampler
    #[arg(long, default_value_t = 0)]
    pub shot_seed: u64,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    /// Directory with graph files
    #[arg(long, default_value = "graphs")]
    pub graphs: PathBuf,
    /// Output directory
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Passes over the training graphs
    #[arg(long, default_value_t = 1)]
    pub epochs: usize,
    /// ADAM learning rate [default: 0.03, or 0.001 with --classical]
    #[arg(long)]
    pub lr: Option<f64>,
    /// Graphs held out for validation
    #[arg(long, default_value_t = 200)]
    pub validation_size: usize,
    /// Base seed for initialisation and shuffling; run r uses seed + r
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Seed of the validation draw, shared by all runs
    #[arg(long, default_value_t = 0)]
    pub split_seed: u64,
    /// Independent training runs
    #[arg(long, default_value_t = 3)]
    pub repeat_runs: usize,
    /// Validation cadence in optimizer steps
    #[arg(long, default_value_t = 10)]
    pub eval_every: usize,
    /// Record wall-clock seconds in the history
    #[arg(long)]
    pub timing: bool,
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    /// Checkpoint written by `train`
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Directory with graph files
    #[arg(long, default_value = "graphs")]
    pub graphs: PathBuf,
    /// Output directory
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Graphs held out for validation
    #[arg(long, default_value_t = 200)]
    pub validation_size: usize,
    /// Seed of the validation draw
    #[arg(long, default_value_t = 0)]
    pub split_seed: u64,
    /// Score every graph instead of the validation draw
    #[arg(long)]
    pub all: bool,
    /// Estimate readouts from this many shots instead of exact expectations
    #[arg(long)]
    pub shots: Option<u32>,
    /// Seed of the shot sampler
    #[arg(long, default_value_t = 0)]
    pub shot_seed: u64,
}

#[derive(Args, Debug)]
pub struct DescribeArgs {
    /// mps, ttn or mera
    #[arg(long, default_value = "ttn")]
    pub ansatz: AnsatzKind,
    /// Circuit width
    #[arg(long, default_value_t = 8)]
    pub qubits: usize,
    /// Readout qubits
    #[arg(long, default_value_t = 1)]
    pub readouts: usize,
}

/// Whether `id` was given on the command line rather than by its default.
pub fn given(m: &ArgMatches, id: &str) -> bool {
    matches!(m.value_source(id), Some(ValueSource::CommandLine))
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.downcast_ref::<UsageError>().is_some() {
            return 1;
        }
        if let Some(e) = cause.downcast_ref::<qgnn_core::Error>() {
            return match e {
                e if e.is_data_error() => 2,
                qgnn_core::Error::Construction(_) | qgnn_core::Error::Size(_) => 1,
                _ => 3,
            };
        }
        if cause.downcast_ref::<std::io::Error>().is_some() || cause.downcast_ref::<serde_json::Error>().is_some() {
            return 2;
        }
    }
    3
}

fn main() -> ExitCode {
    let matches = match Cli::command().try_get_matches() {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    let sub = matches.subcommand().map(|(_, m)| m).expect("subcommand is required");
    match commands::run(cli, sub) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
