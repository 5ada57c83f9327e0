use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod chart;
mod commands;

#[derive(Debug, Parser)]
#[command(name = "model-search", version, about = "Pick pretrained models to fine-tune under a budget")]
struct Cli {
    /// Directory holding models.csv, tasks.csv, accuracy.csv, proxy_scores.csv and embeddings/
    #[arg(long, global = true, default_value = "data")]
    data_dir: PathBuf,

    /// Output directory (defaults to the data directory)
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Seed for synthetic generation and linear-probe shuffling
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Worker threads (0 = all cores)
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic catalog, embeddings and accuracy table
    Synth(SynthArgs),
    /// Compute proxy scores for a pool, reusing cached ones
    Proxy(ProxyArgs),
    /// Write the models each strategy would fine-tune
    Rank(RankArgs),
    /// Regret tables, budget curves, minimal budgets and charts
    Report(ReportArgs),
    /// Show that zero regret and correlation are different things
    DemoCorrelation,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 12)]
    models: usize,
    #[arg(long, default_value_t = 6)]
    tasks: usize,
    #[arg(long, default_value_t = 2)]
    experts: usize,
    #[arg(long, default_value_t = 4)]
    classes: u32,
    #[arg(long, default_value_t = 800)]
    train: u32,
    #[arg(long, default_value_t = 200)]
    val: u32,
    #[arg(long, value_delimiter = ',', default_value = "8,16,32")]
    dims: Vec<u32>,
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, default_value_t = 5)]
    runs: u32,
    #[arg(long, default_value_t = 0.2)]
    quality_lo: f64,
    #[arg(long, default_value_t = 0.7)]
    quality_hi: f64,
    #[arg(long, default_value_t = 0.5)]
    expert_bonus: f64,
}

#[derive(Debug, Args)]
struct ProxyArgs {
    /// knn or linear
    #[arg(long)]
    kind: String,
    #[arg(long, default_value = "all")]
    pool: String,
    /// Restrict to these task ids (default: all tasks)
    #[arg(long, value_delimiter = ',')]
    tasks: Vec<String>,
    /// Neighbours for knn
    #[arg(long, default_value_t = 1)]
    k: usize,
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.01")]
    lrs: Vec<f64>,
    #[arg(long, default_value_t = 2500)]
    steps: usize,
    #[arg(long, default_value_t = 512)]
    batch: usize,
    #[arg(long, default_value_t = 5)]
    repeats: usize,
}

#[derive(Debug, Args)]
struct RankArgs {
    #[arg(long, value_delimiter = ',', default_value = "hybrid-linear")]
    strategies: Vec<String>,
    #[arg(long, default_value = "all")]
    pool: String,
    #[arg(long, value_delimiter = ',', default_value = "1,2")]
    budgets: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    tasks: Vec<String>,
}

#[derive(Debug, Args)]
struct ReportArgs {
    #[arg(long, value_delimiter = ',', default_value = "all")]
    pools: Vec<String>,
    #[arg(long, value_delimiter = ',', default_value = "agnostic,linear,hybrid-linear")]
    strategies: Vec<String>,
    #[arg(long, value_delimiter = ',', default_value = "1,2")]
    budgets: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    tasks: Vec<String>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion) => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("").trim_start_matches("error: ");
            eprintln!("ERROR usage: {first}");
            return ExitCode::from(2);
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ERROR {}: {e}", e.code());
            ExitCode::FAILURE
        }
    }
}
