//! `crowddest`: simulate, build heatmap datasets, train, evaluate and sweep.
//!
//! Exit codes: 0 success, 2 invalid configuration or input, 3 I/O failure.

mod commands;
mod config;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "crowddest", version, about = "Destination-distribution inference from crowd heatmaps")]
struct Cli {
    /// Worker threads for simulation, extraction and training.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    /// Repeat for more log output.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the simulator and write one trajectory CSV per run.
    Simulate(SimulateArgs),
    /// Turn trajectory logs into a heatmap dataset CSV.
    Dataset(DatasetArgs),
    /// Fit a destination predictor on the training part of a dataset.
    Train(TrainArgs),
    /// Score a model on a dataset.
    Evaluate(EvaluateArgs),
    /// Run one of the parameter sweeps.
    #[command(subcommand)]
    Sweep(SweepCommand),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// TOML file with `[layout]`, `[scenario]` and `[sim]` tables.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value_t = 50)]
    pub runs: usize,
    /// Simulated seconds per run; overrides the config.
    #[arg(long)]
    pub duration: Option<f64>,
    /// Base seed; run k uses derive(seed, [k]). Overrides `sim.rng_seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

/// Where the camera cutout sits and how logs are sampled.
#[derive(Debug, Args, Clone)]
pub struct CutoutArgs {
    /// Config used for the crossroad layout; defaults to the one recorded by `simulate`.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Pixel size (m).
    #[arg(long, default_value_t = 0.5)]
    pub resolution: f64,
    #[arg(long, default_value_t = 12.0)]
    pub warmup: f64,
    /// Run length of the logs (s); defaults to the simulate manifest, else 500.
    #[arg(long)]
    pub duration: Option<f64>,
    /// Logging interval of the logs (s); defaults to the simulate manifest, else 0.4.
    #[arg(long)]
    pub log_interval: Option<f64>,
}

#[derive(Debug, Args)]
pub struct DatasetArgs {
    /// Directory of trajectory CSVs written by `simulate`.
    #[arg(long)]
    pub logs: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Cutout size WIDTHxHEIGHT in meters.
    #[arg(long, default_value = "10x10")]
    pub cutout: String,
    /// Distance of the cutout's upper edge below the crossing (m).
    #[arg(long, default_value_t = 0.0)]
    pub distance: f64,
    /// Lower-left corner X,Y; replaces placement by `--distance`.
    #[arg(long)]
    pub at: Option<String>,
    /// Seconds between sampled frames.
    #[arg(long, default_value_t = 8.0)]
    pub interval: f64,
    /// Skip frames with an empty cutout instead of failing.
    #[arg(long)]
    pub permissive: bool,
    #[command(flatten)]
    pub cutout_args: CutoutArgs,
}

#[derive(Debug, Args, Clone)]
pub struct ForestArgs {
    #[arg(long, default_value_t = 20)]
    pub trees: usize,
    /// Features tried per split; all when omitted.
    #[arg(long)]
    pub mtry: Option<usize>,
    #[arg(long, default_value_t = 2)]
    pub min_samples_split: usize,
    #[arg(long)]
    pub max_depth: Option<usize>,
    #[arg(long)]
    pub no_bootstrap: bool,
    /// Share of samples used for training.
    #[arg(long, default_value_t = 0.8)]
    pub train_fraction: f64,
    /// Base seed; split and forest seeds are derived from it.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub forest: ForestArgs,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// Summary CSV.
    #[arg(long)]
    pub out: PathBuf,
    /// Score every sample instead of the held-out split recorded in the model.
    #[arg(long)]
    pub all: bool,
    /// Optional per-sample error CSV.
    #[arg(long)]
    pub errors: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum SweepCommand {
    /// Error and training time against the number of trees.
    Trees {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "1,2,5,10,20,50")]
        counts: Vec<usize>,
        #[command(flatten)]
        common: SweepArgs,
    },
    /// Error against the distance of the cutout below the crossing.
    Position {
        #[arg(long)]
        logs: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "0,2.5,5,7.5,10")]
        distances: Vec<f64>,
        #[arg(long, default_value_t = 10.0)]
        height: f64,
        #[command(flatten)]
        cutout: CutoutArgs,
        #[command(flatten)]
        common: SweepArgs,
    },
    /// Error against cutout height at full street width.
    Size {
        #[arg(long)]
        logs: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "2.5,5,7.5,10,12.5,15,17.5,20")]
        heights: Vec<f64>,
        #[command(flatten)]
        cutout: CutoutArgs,
        #[command(flatten)]
        common: SweepArgs,
    },
}

#[derive(Debug, Args, Clone)]
pub struct SweepArgs {
    /// Report CSV; the provenance and manifest are written beside it.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 5)]
    pub reps: usize,
    #[command(flatten)]
    pub forest: ForestArgs,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let result = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs.max(1))
        .build_global()
        .map_err(anyhow::Error::from)
        .and_then(|()| commands::run(cli.command, cli.jobs.max(1)));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

/// 3 when any cause is an I/O failure, otherwise 2.
fn exit_code(err: &anyhow::Error) -> u8 {
    let io = err.chain().any(|c| {
        c.is::<std::io::Error>() || matches!(c.downcast_ref::<crowddest::Error>(), Some(crowddest::Error::Io(_)))
    });
    if io {
        3
    } else {
        2
    }
}
