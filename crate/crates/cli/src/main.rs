//! `zsl`: zero-shot learning from the command line.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use zsl_core::{Method, Mode, SigmaPolicy, WeightMode};

#[derive(Parser, Debug)]
#[command(name = "zsl", version, about = "Attribute-based zero-shot learning toolkit")]
pub struct Cli {
    /// Seed for data generation and stochastic training.
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,
    /// Worker threads for per-sample inference (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    /// Suppress progress and summary output.
    #[arg(long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Normalize an attribute matrix and append its complementary attributes.
    Expand {
        #[arg(long)]
        attributes: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a seeded synthetic problem.
    Synth(SynthArgs),
    /// Train per-attribute logistic classifiers.
    TrainDap {
        #[command(flatten)]
        data: DataArgs,
        /// Train on [A; 1 - A] instead of A.
        #[arg(long)]
        ca: bool,
        #[command(flatten)]
        bank: BankArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the bilinear label-embedding model.
    TrainLe {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        ca: bool,
        #[command(flatten)]
        le: LeArgs,
        #[arg(long)]
        out: PathBuf,
        /// Per-epoch loss CSV (default: <out>.loss.csv).
        #[arg(long)]
        loss_trace: Option<PathBuf>,
    },
    /// Train (or load) a model, predict the test pool and evaluate.
    Predict(PredictArgs),
    /// Evaluate an existing predictions file.
    Eval {
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        splits: PathBuf,
        #[arg(long)]
        predictions: PathBuf,
        #[arg(long, default_value = "zsl")]
        mode: Mode,
        /// Report CSV (summary goes to stdout either way).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        confusion: Option<PathBuf>,
    },
    /// Recognition bounds with and without complementary attributes.
    PacBound(PacArgs),
    /// Per-class entropy of original versus expanded attributes.
    Entropy {
        #[arg(long)]
        attributes: PathBuf,
        /// Output CSV (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
pub struct DataArgs {
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long)]
    pub splits: PathBuf,
    #[arg(long)]
    pub attributes: PathBuf,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    /// Directory for features.csv, splits.csv, attributes.csv and manifest.json.
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 8)]
    pub k: usize,
    #[arg(long, default_value_t = 4)]
    pub l: usize,
    #[arg(long, default_value_t = 16)]
    pub m: usize,
    #[arg(long, default_value_t = 32)]
    pub d: usize,
    #[arg(long, default_value_t = 50)]
    pub samples_per_class: usize,
    #[arg(long, default_value_t = 0.3)]
    pub noise_sigma: f64,
    #[arg(long, default_value_t = 0.4)]
    pub sparsity: f64,
}

#[derive(Args, Debug, Clone, Copy)]
pub struct BankArgs {
    #[arg(long, default_value_t = 0.05)]
    pub bank_lr: f64,
    #[arg(long, default_value_t = 300)]
    pub bank_epochs: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub bank_l2: f64,
}

#[derive(Args, Debug, Clone, Copy)]
pub struct LeArgs {
    #[arg(long, default_value_t = 0.1)]
    pub le_lr: f64,
    #[arg(long, default_value_t = 30)]
    pub le_epochs: usize,
    #[arg(long, default_value_t = 1e-4)]
    pub le_l2: f64,
    #[arg(long, default_value = "uniform")]
    pub weight_mode: WeightMode,
}

#[derive(Args, Debug)]
pub struct PredictArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub method: Method,
    #[arg(long, default_value = "zsl")]
    pub mode: Mode,
    /// Output directory; created if missing.
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Use a bank from train-dap instead of training one.
    #[arg(long, conflicts_with = "model")]
    pub bank: Option<PathBuf>,
    /// Use a model from train-le instead of training one.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[command(flatten)]
    pub bank_hyper: BankArgs,
    #[command(flatten)]
    pub le_hyper: LeArgs,
    /// Kernel bandwidth: `median` or a positive number.
    #[arg(long, default_value = "median")]
    pub sigma: SigmaPolicy,
    #[arg(long, default_value_t = 500)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    /// Also run one mean-shift restart per attribute row (diagnostic).
    #[arg(long)]
    pub restarts: bool,
}

#[derive(Args, Debug)]
#[command(group(clap::ArgGroup::new("tolerance").required(true).args(["rp_file", "g_inv"])))]
pub struct PacArgs {
    /// Number of attributes.
    #[arg(long = "M")]
    pub m: u32,
    /// Feature dimension.
    #[arg(long)]
    pub d: u32,
    /// Number of label points.
    #[arg(long)]
    pub n: u32,
    #[arg(long)]
    pub gamma: f64,
    #[arg(long)]
    pub delta: f64,
    /// Distance sample (`distance`) or CDF table (`z,cdf`).
    #[arg(long)]
    pub rp_file: Option<PathBuf>,
    /// Tolerated attribute errors, given directly.
    #[arg(long)]
    pub g_inv: Option<f64>,
    /// Use (1 - delta)^(2M) for the complementary model.
    #[arg(long)]
    pub strict_2m: bool,
    /// Output CSV (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", render(&e));
            ExitCode::from(commands::exit_code(&e))
        }
    }
}

/// Error chain on one line, skipping causes already quoted by their parent.
fn render(e: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in e.chain() {
        let msg = cause.to_string();
        if out.contains(&msg) {
            continue;
        }
        if !out.is_empty() {
            out.push_str(": ");
        }
        out.push_str(&msg);
    }
    out
}
