//! Command-line surface for the classification pipeline.
//!
//! Exit codes: 0 success, 1 usage/config error, 2 data error,
//! 3 provider/backend error, 4 I/O error.

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use offlang::{Pipeline, PipelineConfig, Result};

#[derive(Parser)]
#[command(name = "offlang", version, about = "Multilingual abusive-text classification pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print per-task class counts and totals for the configured data files
    Stats {
        #[arg(long)]
        config: PathBuf,
    },
    /// Train the task cascade on the configured training file
    Train {
        #[arg(long)]
        config: PathBuf,
    },
    /// Predict labels for a TSV of posts and write the submission file
    Predict {
        #[arg(long)]
        config: PathBuf,
        /// Input TSV (`text_id<TAB>text`, label columns allowed and ignored)
        input: PathBuf,
        /// Output prediction TSV
        output: PathBuf,
    },
    /// Score a prediction file against a gold file
    Evaluate {
        #[arg(long)]
        config: PathBuf,
        /// Gold TSV with labels
        gold: PathBuf,
        /// Prediction TSV from `predict`
        pred: PathBuf,
        /// Directory for the JSON and text report files
        report_dir: Option<PathBuf>,
    },
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Stats { config } => {
            let pipeline = Pipeline::new(PipelineConfig::load(config)?)?;
            print!("{}", pipeline.stats()?);
        }
        Command::Train { config } => {
            let pipeline = Pipeline::new(PipelineConfig::load(&config)?)?;
            let (cascade, summaries) = pipeline.train()?;
            for s in summaries {
                println!(
                    "task {}: {} rows, {} classes, {} trees",
                    s.task, s.rows, s.classes, s.trees
                );
            }
            println!(
                "saved {} cascade to {}",
                cascade.language(),
                pipeline
                    .config()
                    .model
                    .path
                    .as_deref()
                    .expect("train checked the model path")
                    .display()
            );
        }
        Command::Predict {
            config,
            input,
            output,
        } => {
            let pipeline = Pipeline::new(PipelineConfig::load(config)?)?;
            let rows = pipeline.predict_file(&input, &output)?;
            println!("wrote {rows} predictions to {}", output.display());
        }
        Command::Evaluate {
            config,
            gold,
            pred,
            report_dir,
        } => {
            let pipeline = Pipeline::new(PipelineConfig::load(config)?)?;
            let (_, text) = pipeline.evaluate_files(&gold, &pred, report_dir.as_deref())?;
            print!("{text}");
            if let Some(dir) = report_dir {
                println!("reports written to {}", dir.display());
            }
        }
    }
    Ok(())
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // --help and --version are not usage errors
            if e.use_stderr() {
                eprint!("{e}");
                std::process::exit(1);
            }
            print!("{e}");
            std::process::exit(0);
        }
    };
    if let Err(e) = execute(cli.command) {
        eprintln!("error: {e}");
        std::process::exit(e.category().exit_code());
    }
}
