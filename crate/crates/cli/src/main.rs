//! `grmlr`: fit, evaluate and apply graph-regularized stage classifiers.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "grmlr", version, about = "Graph-regularized multinomial logistic regression")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct GlobalOpts {
    /// Hyperparameter file (`key = value` lines).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "grmlr-out")]
    pub out: PathBuf,
    /// Overrides the configuration seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for grid searches and permutation tests.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Exit with status 2 when any fit fails to converge.
    #[arg(long, global = true)]
    pub strict: bool,
    /// Also write SVG charts where available.
    #[arg(long, global = true)]
    pub svg: bool,
}

#[derive(Args, Debug, Clone)]
pub struct DataArgs {
    /// Relative abundances, `site_id,<taxa...>`.
    #[arg(long)]
    pub abundances: PathBuf,
    /// Macrofauna counts, `site_id,dead,adult,juvenile,clam`.
    #[arg(long)]
    pub macrofauna: Option<PathBuf>,
    /// Stage labels, `site_id,stage`.
    #[arg(long)]
    pub labels: PathBuf,
    /// Comma-separated stage names in label-index order.
    #[arg(long, value_delimiter = ',', default_value = "juvenile,adult,dead")]
    pub stages: Vec<String>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Train on every site and save the model with its graph heatmaps.
    Fit(DataArgs),
    /// Predict stages from abundances with a saved model.
    Predict {
        #[arg(long)]
        abundances: PathBuf,
        #[arg(long)]
        model: PathBuf,
    },
    /// Evaluation protocols.
    #[command(subcommand)]
    Eval(EvalCommand),
    /// Write a synthetic dataset with planted block structure.
    Synth(SynthArgs),
    /// Graph utilities.
    #[command(subcommand)]
    Graph(GraphCommand),
}

#[derive(Subcommand, Debug)]
pub enum EvalCommand {
    /// Leave-one-out cross-validation and coefficient ranking.
    Loocv(DataArgs),
    /// Label-permutation significance test of LOOCV accuracy.
    Permtest {
        #[command(flatten)]
        data: DataArgs,
        /// Number of permutations.
        #[arg(long, default_value_t = 50)]
        permutations: usize,
    },
    /// Exhaustive hyperparameter search scored by LOOCV.
    Grid {
        #[command(flatten)]
        data: DataArgs,
        /// `default` or a grid file of `name = v1, v2, ...` lines.
        #[arg(long, default_value = "default")]
        grid: String,
    },
    /// LOOCV of the full model and its four component ablations.
    Ablate(DataArgs),
    /// Best grid accuracy at each alpha.
    AlphaSweep {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, default_value = "default")]
        grid: String,
        /// Alpha values; defaults to 0, 0.1, ..., 1.
        #[arg(long, value_delimiter = ',')]
        alphas: Option<Vec<f64>>,
    },
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 13)]
    pub n: usize,
    #[arg(long, default_value_t = 26)]
    pub p: usize,
    #[arg(long, default_value_t = 3)]
    pub k: usize,
    #[arg(long, default_value_t = 4)]
    pub blocks: usize,
    #[arg(long, default_value_t = 0.9)]
    pub coupling: f64,
    #[arg(long, default_value_t = 0.1)]
    pub noise: f64,
}

#[derive(Subcommand, Debug)]
pub enum GraphCommand {
    /// Build the graph from all sites and write a_macro, a_co and adjacency CSVs.
    Export {
        #[arg(long)]
        abundances: PathBuf,
        #[arg(long)]
        macrofauna: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(status) => status.into(),
        Err(e) => {
            let chain: Vec<String> = e.chain().map(|c| c.to_string()).collect();
            eprintln!("error: {}", chain.join(": ").replace('\n', " "));
            ExitCode::from(1)
        }
    }
}
