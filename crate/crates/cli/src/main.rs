//! Command-line front end: predictive metric distributions, substitution
//! bounds, calibrator fitting, the experiment harness, and a synthetic data
//! generator. Exit codes: 0 success, 1 runtime error, 2 usage error.

mod commands;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "pemi", version, about = "Predictive distributions for classifier metrics under missing labels")]
struct Cli {
    /// Worker threads (outputs are thread-count invariant).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Predictive distributions for metrics on a CSV with missing labels.
    Evaluate(EvaluateArgs),
    /// Optimistic/pessimistic metric bounds.
    Bounds(BoundsArgs),
    /// Fit a scaling-binning calibrator from a labeled CSV.
    Calibrate(CalibrateArgs),
    /// Run a masking/policy/method experiment from a config file.
    Experiment(ExperimentArgs),
    /// Generate synthetic scored records, optionally masked.
    Synth(SynthArgs),
}

#[derive(Args)]
struct EvaluateArgs {
    /// Input CSV (columns: score, label; optional truth, id).
    #[arg(long)]
    input: PathBuf,
    /// Metrics to evaluate (comma-separated); defaults to all five.
    #[arg(long, value_delimiter = ',')]
    metric: Vec<String>,
    /// pemi | pemi-gauss | bootstrap
    #[arg(long, default_value = "pemi-gauss")]
    method: String,
    /// half | prevalence | calibrated
    #[arg(long, default_value = "half")]
    policy: String,
    /// Replicates for pemi / bootstrap.
    #[arg(long, default_value_t = 10_000)]
    b: u64,
    #[arg(long, default_value_t = 0.5)]
    tau: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output path; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
    /// json | csv
    #[arg(long, default_value = "json")]
    format: String,
    /// Fitted calibrator JSON (calibrated policy).
    #[arg(long)]
    calibrator: Option<PathBuf>,
    /// Labeled CSV to fit a calibrator on (calibrated policy).
    #[arg(long)]
    calibration_csv: Option<PathBuf>,
    /// Bins when fitting from --calibration-csv.
    #[arg(long, default_value_t = 10)]
    bins: usize,
    /// Positive count for the prevalence policy (defaults to the input's
    /// known-label counts).
    #[arg(long)]
    prevalence_pos: Option<usize>,
    /// Total count for the prevalence policy.
    #[arg(long)]
    prevalence_total: Option<usize>,
}

#[derive(Args)]
struct BoundsArgs {
    #[arg(long)]
    input: PathBuf,
    /// Metrics (comma-separated); defaults to all five.
    #[arg(long, value_delimiter = ',')]
    metric: Vec<String>,
    #[arg(long, default_value_t = 0.5)]
    tau: f64,
    #[arg(long)]
    output: Option<PathBuf>,
    /// json | csv
    #[arg(long, default_value = "json")]
    format: String,
}

#[derive(Args)]
struct CalibrateArgs {
    /// Labeled CSV (rows with missing labels are rejected).
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = 10)]
    bins: usize,
    /// Output path for the calibrator JSON; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Experiment config, JSON or TOML by extension.
    #[arg(long)]
    config: PathBuf,
    /// Directory for fidelity.csv, fidelity.json and config.json.
    #[arg(long)]
    output_dir: PathBuf,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 4.0)]
    coef: f64,
    #[arg(long, default_value_t = -2.0)]
    intercept: f64,
    /// Score channel distortion exponent; 1 = calibrated.
    #[arg(long, default_value_t = 1.0)]
    miscalibration: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    output: PathBuf,
    /// Mask this fraction of labels completely at random.
    #[arg(long)]
    mask_mcar: Option<f64>,
    /// Mask this fraction with a fixed positive composition; needs
    /// --mnar-eta.
    #[arg(long)]
    mask_mnar: Option<f64>,
    /// Positive fraction of the masked set for --mask-mnar.
    #[arg(long)]
    mnar_eta: Option<f64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .is_err()
        {
            eprintln!("error: could not configure {threads} worker threads");
            return ExitCode::from(1);
        }
    }
    let outcome = match cli.command {
        Command::Evaluate(args) => commands::evaluate(args),
        Command::Bounds(args) => commands::bounds(args),
        Command::Calibrate(args) => commands::calibrate(args),
        Command::Experiment(args) => commands::experiment(args),
        Command::Synth(args) => commands::synth(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(commands::CmdError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(commands::CmdError::Runtime(err)) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}

pub(crate) use {BoundsArgs as BoundsCmd, CalibrateArgs as CalibrateCmd, EvaluateArgs as EvaluateCmd, ExperimentArgs as ExperimentCmd, SynthArgs as SynthCmd};
