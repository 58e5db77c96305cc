use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;

/// Simulate, fit, summarize and evaluate generalized promotion time cure
/// models with cell-type proportions.
#[derive(Debug, Parser)]
#[command(name = "gptcm", version)]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// JSON job configuration, or a manifest.json from an earlier run.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for every randomized step; overrides the config file.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for chains (results do not depend on it).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true, default_value = "gptcm-out")]
    pub out_dir: PathBuf,
    /// Progress messages on stderr.
    #[arg(long, short, global = true)]
    pub verbose: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw a dataset bundle and its truth file.
    Simulate(SimulateArgs),
    /// Run the MCMC sampler on a dataset bundle.
    Fit(FitArgs),
    /// Posterior summaries, inclusion probabilities and the MPM.
    Summarize(SummarizeArgs),
    /// Brier scores, selection rates and coefficient RMSE.
    Evaluate(EvaluateArgs),
    /// Predicted population survival curves.
    Predict(PredictArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// low-dim, high-dim or cox-misspec.
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Replicate index; replicates share the truth and redraw everything else.
    #[arg(long)]
    pub replicate: Option<u64>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Dataset bundle directory.
    #[arg(long)]
    pub data: PathBuf,
    /// MRF edge list; defaults to graph.csv in the bundle.
    #[arg(long)]
    pub graph: Option<PathBuf>,
    /// noBVS1, noBVS2, Ber1, Ber2, MRF1 or MRF2 (default MRF2).
    #[arg(long)]
    pub variant: Option<String>,
    /// Total iterations per chain, warmup included.
    #[arg(long)]
    pub iterations: Option<usize>,
    /// Leading iterations discarded.
    #[arg(long)]
    pub warmup: Option<usize>,
    /// Keep every n-th post-warmup draw.
    #[arg(long)]
    pub thin: Option<usize>,
    /// Number of independent chains.
    #[arg(long)]
    pub chains: Option<usize>,
    /// Chain store format: csv or binary.
    #[arg(long)]
    pub format: Option<String>,
    /// Resolve and validate the job, write only the manifest.
    #[arg(long)]
    pub dry_run: bool,
}

#[derive(Debug, Args)]
pub struct SummarizeArgs {
    /// Chain store directory written by `fit`.
    #[arg(long)]
    pub fit: PathBuf,
    /// mPIP threshold of the median probability model.
    #[arg(long)]
    pub threshold: Option<f64>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Chain store directories; repeat to compare fits.
    #[arg(long, required = true)]
    pub fit: Vec<PathBuf>,
    /// truth.json from `simulate`, for RMSE and selection rates.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Validation bundle for Brier scores.
    #[arg(long)]
    pub validation: Option<PathBuf>,
    /// Training bundle; adds a Kaplan-Meier reference to the Brier table.
    #[arg(long)]
    pub train: Option<PathBuf>,
    /// mpm, nobvs or drawwise.
    #[arg(long)]
    pub mode: Option<String>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub fit: PathBuf,
    /// Bundle whose subjects are predicted.
    #[arg(long)]
    pub data: PathBuf,
    /// Comma-separated times; defaults to the configured grid.
    #[arg(long, value_delimiter = ',')]
    pub times: Option<Vec<f64>>,
    #[arg(long)]
    pub mode: Option<String>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion) => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("invalid arguments").trim_start_matches("error: ");
            eprintln!("gptcm: error E_USAGE: {first}");
            return ExitCode::from(2);
        }
    };
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let line = e.to_string().replace('\n', " ");
            eprintln!("gptcm: error {}: {line}", e.code());
            ExitCode::from(commands::exit_code(&e))
        }
    }
}
