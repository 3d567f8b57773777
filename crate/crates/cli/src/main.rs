mod commands;
mod config;
mod errors;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};

use config::{ExperimentConfig, Overrides};

/// Persian tweet sentiment experiments: split, train, evaluate, predict, export.
///
/// Settings come from `--config <file.toml>`; any key can be overridden with
/// the flag of the same name (`output_dir` -> `--output-dir`).
#[derive(Parser)]
#[command(name = "farsent", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Subcommand)]
enum Command {
    /// Shuffle-split the corpus into train.csv / test.csv plus a manifest.
    Split,
    /// Fit preprocessing, vectorizer and model on train.csv.
    Train,
    /// Score the trained model on test.csv.
    Evaluate {
        /// Model file; defaults to <output_dir>/model.farsent.
        #[arg(long)]
        model_file: Option<PathBuf>,
    },
    /// Label the rows of a CSV with a `text` column (and optional `id`).
    Predict {
        #[arg(long)]
        model_file: Option<PathBuf>,
        #[arg(long)]
        input: PathBuf,
        /// Defaults to <output_dir>/predictions.csv.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Skip malformed rows instead of failing.
        #[arg(long)]
        lenient: bool,
    },
    /// Export term frequencies and class / tag distributions of the corpus.
    Freq,
    /// Write a synthetic labeled corpus.
    Synth {
        #[arg(long)]
        output: PathBuf,
        #[arg(long, default_value_t = 200)]
        per_class: usize,
    },
    /// Merge evaluation reports into one table sorted by accuracy.
    Compare {
        #[arg(long = "report", required = true)]
        reports: Vec<PathBuf>,
        #[arg(long)]
        output: PathBuf,
    },
}

fn run(cli: Cli) -> Result<()> {
    if let Command::Compare { reports, output } = &cli.command {
        return commands::compare(reports, output);
    }
    let config = ExperimentConfig::load(&cli.overrides)?;
    match &cli.command {
        Command::Split => commands::split(&config),
        Command::Train => commands::train(&config),
        Command::Evaluate { model_file } => commands::evaluate(&config, model_file.as_deref()),
        Command::Predict {
            model_file,
            input,
            output,
            lenient,
        } => commands::predict(&config, model_file.as_deref(), input, output.as_deref(), *lenient),
        Command::Freq => commands::freq(&config),
        Command::Synth { output, per_class } => commands::synth(&config, *per_class, output),
        Command::Compare { .. } => unreachable!(),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { errors::EXIT_CONFIG } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(errors::exit_code(&err))
        }
    }
}
