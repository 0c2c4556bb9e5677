use std::path::PathBuf;

use anyhow::Result;
use clap::{Args, ValueEnum};
use serde_json::json;

use ambiq_core::corpus::{self, TriviaOptions};
use ambiq_core::error::Error;
use ambiq_core::forge::{
    build_tuning_set, rows_to_jsonl, split_train_val, training_manifest, ForgeOptions,
    ManifestOverrides,
};
use ambiq_core::prompting::InstructionMode;
use ambiq_core::resources::resources;

use crate::common;

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    /// Draw every row's instruction from the full 20-entry pool.
    Consistent,
    /// Plain instructions for answerable rows, abstaining ones otherwise.
    ContextSpecific,
}

#[derive(Args)]
pub struct ForgeArgs {
    /// Raw reading-comprehension JSON (answerable + unanswerable).
    #[arg(long)]
    pub squad: Option<PathBuf>,
    /// Raw trivia JSON (answerable only).
    #[arg(long)]
    pub trivia: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "context-specific")]
    pub mode: ModeArg,
    /// Also synthesize an unanswerable twin for each eligible trivia record.
    #[arg(long)]
    pub synthetic_ambig: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.1)]
    pub val_fraction: f64,
    /// Character budget for trivia evidence contexts.
    #[arg(long, default_value_t = 2000)]
    pub max_evidence_chars: usize,
    /// Fine-tuning profile for manifest.json.
    #[arg(long, default_value = "llama2-7b")]
    pub profile: String,
    #[arg(long)]
    pub epochs: Option<u32>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub optimizer: Option<String>,
    #[arg(long)]
    pub scheduler: Option<String>,
    #[arg(long)]
    pub warmup_ratio: Option<f64>,
    #[arg(long)]
    pub gradient_accumulation: Option<u32>,
    #[arg(long)]
    pub batch_size: Option<u32>,
    #[arg(long)]
    pub out_dir: PathBuf,
}

pub fn run(args: ForgeArgs) -> Result<i32> {
    if args.squad.is_none() && args.trivia.is_none() {
        return Err(Error::Config("pass --squad and/or --trivia".into()).into());
    }
    let mut squad_records = Vec::new();
    let mut trivia_records = Vec::new();
    let mut squad_rejected = 0usize;
    let mut trivia_rejected = 0usize;
    if let Some(path) = &args.squad {
        let outcome = corpus::parse_squad(&common::read_bytes(path)?)?;
        squad_rejected = outcome.rejections.len();
        squad_records = outcome.records;
    }
    if let Some(path) = &args.trivia {
        let outcome = corpus::parse_trivia_with(
            &common::read_bytes(path)?,
            &TriviaOptions {
                max_evidence_chars: args.max_evidence_chars,
            },
        )?;
        trivia_rejected = outcome.rejections.len();
        trivia_records = outcome.records;
    }

    let opts = ForgeOptions {
        mode: match args.mode {
            ModeArg::Consistent => InstructionMode::Consistent,
            ModeArg::ContextSpecific => InstructionMode::ContextSpecific,
        },
        synthetic_ambig: args.synthetic_ambig,
        seed: args.seed,
    };
    let output = build_tuning_set(
        &squad_records,
        &trivia_records,
        &opts,
        &resources().instructions,
    )?;
    let (train, val) = split_train_val(&output.rows, args.val_fraction, args.seed)?;

    let overrides = ManifestOverrides {
        epochs: args.epochs,
        learning_rate: args.learning_rate,
        optimizer: args.optimizer.clone(),
        scheduler: args.scheduler.clone(),
        warmup_ratio: args.warmup_ratio,
        gradient_accumulation: args.gradient_accumulation,
        batch_size: args.batch_size,
    };
    let manifest = training_manifest(&args.profile, &overrides)?;

    common::write_bytes(&args.out_dir.join("train.jsonl"), rows_to_jsonl(&train)?.as_bytes())?;
    common::write_bytes(&args.out_dir.join("val.jsonl"), rows_to_jsonl(&val)?.as_bytes())?;
    common::write_json_pretty(&args.out_dir.join("manifest.json"), &manifest)?;
    let stats = json!({
        "forge": output.stats,
        "train_rows": train.len(),
        "val_rows": val.len(),
        "val_fraction": args.val_fraction,
        "seed": args.seed,
        "parse_rejections": {"squad": squad_rejected, "trivia": trivia_rejected},
    });
    common::write_json_pretty(&args.out_dir.join("stats.json"), &stats)?;

    println!(
        "{} rows ({} train / {} val), {} synthetic, {} skipped, {} downsampled",
        output.stats.rows_total,
        train.len(),
        val.len(),
        output.stats.synthetic_rows,
        output.stats.skipped_ineligible,
        output.stats.downsampled,
    );
    Ok(0)
}
