//! `ambiq`: ingest QA corpora, run batch evaluations against a model
//! endpoint or offline stubs, score predictions, build instruction-tuning
//! datasets, and render reports.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 configuration error,
//! 3 partial prediction failure (outputs were written, some records failed).

mod commands;
mod common;

use clap::{Parser, Subcommand};

use ambiq_core::resources::resources;

fn long_version() -> &'static str {
    static VERSION: std::sync::OnceLock<String> = std::sync::OnceLock::new();
    VERSION.get_or_init(|| {
        let checksums = &resources().checksums;
        format!(
            "{}\nembedded resources:\n  stopwords            sha256 {}\n  abstention phrases   sha256 {}\n  instruction table    sha256 {}",
            env!("CARGO_PKG_VERSION"),
            checksums.stopwords,
            checksums.abstention_phrases,
            checksums.instructions,
        )
    })
}

#[derive(Parser)]
#[command(
    name = "ambiq",
    version,
    long_version = long_version(),
    about = "Bias-aware QA evaluation harness and tuning-set forge"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a raw dataset into canonical records.jsonl plus a rejection report.
    Ingest(commands::ingest::IngestArgs),
    /// Render prompts, resolve them against a backend, score, and report.
    Eval(commands::eval::EvalArgs),
    /// Score an existing predictions file against its records.
    Score(commands::score::ScoreArgs),
    /// Build a balanced instruction-tuning dataset with train/val split.
    Forge(commands::forge::ForgeArgs),
    /// Re-render a report (or raw scored results) as json, csv, or markdown.
    Report(commands::report::ReportArgs),
    /// Render a dimension-by-model heatmap from several run directories.
    Heatmap(commands::heatmap::HeatmapArgs),
    /// Tabulate headline numbers from several run directories side by side.
    Compare(commands::compare::CompareArgs),
}

fn run(cli: Cli) -> anyhow::Result<i32> {
    match cli.command {
        Command::Ingest(args) => commands::ingest::run(args),
        Command::Eval(args) => commands::eval::run(args),
        Command::Score(args) => commands::score::run(args),
        Command::Forge(args) => commands::forge::run(args),
        Command::Report(args) => commands::report::run(args),
        Command::Heatmap(args) => commands::heatmap::run(args),
        Command::Compare(args) => commands::compare::run(args),
    }
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => std::process::exit(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            let config_error = err.chain().any(|cause| {
                matches!(
                    cause.downcast_ref::<ambiq_core::Error>(),
                    Some(ambiq_core::Error::Config(_))
                )
            });
            std::process::exit(if config_error { 2 } else { 1 });
        }
    }
}
