mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use config::GoldChoice;
use esa_core::nn::OptimizerKind;

#[derive(Parser, Debug)]
#[command(
    name = "esa",
    version,
    about = "Entity summarization with a BiLSTM and supervised attention"
)]
pub struct Cli {
    /// TOML file with run settings; command-line flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads for per-entity evaluation.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Repeat for more log output.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

/// Alias so clap parses `--k both` as one value rather than a repeated flag.
type KSet = Vec<usize>;

fn parse_ks(s: &str) -> Result<KSet, String> {
    match s {
        "5" => Ok(vec![5]),
        "10" => Ok(vec![10]),
        "both" => Ok(vec![5, 10]),
        _ => Err(format!("`{s}` is not one of 5, 10, both")),
    }
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Write a synthetic benchmark directory with the ESBM layout.
    SynthEsbm {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 125)]
        dbpedia: usize,
        #[arg(long, default_value_t = 50)]
        lmdb: usize,
    },
    /// Load a benchmark directory into a dataset file.
    Ingest {
        #[arg(long)]
        esbm_dir: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Permute the triples of every entity with this seed.
        #[arg(long)]
        shuffle_triples: Option<u64>,
        /// Accept entity counts other than 125 DBpedia + 50 LinkedMDB.
        #[arg(long)]
        any_shape: bool,
    },
    /// Train TransE embeddings over every triple of the dataset.
    Pretrain {
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        margin: Option<f64>,
        #[arg(long)]
        lr: Option<f64>,
        #[arg(long)]
        batch_size: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Train one model per fold and k; writes checkpoints and fold logs.
    Train {
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(long)]
        embeddings: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// 5, 10 or both.
        #[arg(long, value_parser = parse_ks)]
        k: Option<KSet>,
        #[arg(long, value_enum)]
        gold_mode: Option<GoldChoice>,
        #[arg(long)]
        folds: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        lr: Option<f64>,
        #[arg(long)]
        optimizer: Option<OptimizerKind>,
        #[arg(long)]
        d_p: Option<usize>,
        #[arg(long)]
        d_h: Option<usize>,
        #[arg(long)]
        patience: Option<usize>,
    },
    /// Score trained fold models and the frequency baseline.
    Evaluate {
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(long)]
        models: PathBuf,
        /// metrics.json path; metrics.csv and reference_tables.json go beside it.
        #[arg(long)]
        out: PathBuf,
    },
    /// Print an entity's top-k triples with their attention weights.
    Summarize {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        dataset: Option<PathBuf>,
        /// Entity id or subject IRI.
        #[arg(long)]
        entity: String,
        #[arg(long)]
        k: usize,
    },
    /// Write gold and machine attention of one entity as CSV.
    ExportAttention {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(long)]
        entity: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum)]
        gold_mode: Option<GoldChoice>,
    },
    /// Write the gold attention vectors of every entity as CSV.
    ExportGold {
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "k10")]
        gold_mode: GoldChoice,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = e.print();
                    ExitCode::SUCCESS
                }
                _ => {
                    let text = e.to_string();
                    let first = text
                        .lines()
                        .next()
                        .unwrap_or("")
                        .trim_start_matches("error: ");
                    eprintln!("E_USAGE: {first}");
                    eprint!("{e}");
                    ExitCode::from(2)
                }
            };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            eprintln!("E_USAGE: --jobs must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
        {
            eprintln!("E_INTERNAL: {e}");
            return ExitCode::from(1);
        }
    }
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}
