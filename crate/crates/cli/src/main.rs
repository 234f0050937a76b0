//! Command-line frontend for the text categorization toolkit.
//!
//! Every subcommand reads one flat key=value config file; a few flags
//! override entries that commonly change between runs without editing
//! the file. Exit codes: 0 on success, 2 for config errors, 3 for data
//! errors, 1 for everything else.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use textcnn::commands;
use textcnn::config::Config;
use textcnn::Error;

#[derive(Parser)]
#[command(
    name = "textcnn",
    about = "Convolutional and linear text categorization over one-hot region vectors",
    version
)]
struct Cli {
    /// Path to the key=value config file.
    #[arg(long, global = true, default_value = "experiment.conf")]
    config: PathBuf,

    /// Overrides train.seed from the config.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Caps the worker threads used for parallel sections.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Builds the word (and optional n-gram) vocabularies from data.train.
    BuildVocab,
    /// Trains a model on data.train and writes model.path.
    Train,
    /// Grid-searches grid.* axes on a dev split, then retrains the winner.
    Select,
    /// Scores data.test with model.path and writes predictions.path.
    Predict,
    /// Compares predictions.path against the labels in data.test.
    Eval,
    /// Shows the regions that excite one convolution neuron the most.
    Inspect,
}

fn run(cli: &Cli) -> textcnn::Result<String> {
    if let Some(n) = cli.threads {
        // Ignore failure: the global pool can only be set once, which
        // matters only in tests that call run twice.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let mut cfg = Config::load(&cli.config)?;
    if let Some(seed) = cli.seed {
        cfg.set("train.seed", &seed.to_string());
    }
    match cli.command {
        Command::BuildVocab => commands::cmd_build_vocab(&cfg),
        Command::Train => commands::cmd_train(&cfg),
        Command::Select => commands::cmd_select(&cfg),
        Command::Predict => commands::cmd_predict(&cfg),
        Command::Eval => commands::cmd_eval(&cfg),
        Command::Inspect => commands::cmd_inspect(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(report) => {
            print!("{report}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{e}");
            match e {
                Error::Config(_) => ExitCode::from(2),
                Error::Data(_) => ExitCode::from(3),
                Error::Train(_) | Error::Io(_) => ExitCode::FAILURE,
            }
        }
    }
}
