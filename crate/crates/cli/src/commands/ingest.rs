use std::path::PathBuf;

use anyhow::Result;
use clap::{Args, ValueEnum};

use ambiq_core::corpus::{self, TriviaOptions};

use crate::common;

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InputFormat {
    /// Multiple-choice bias items, line-delimited JSON.
    Bbq,
    /// Reading comprehension with unanswerable questions, nested JSON.
    Squad,
    /// Open-domain trivia with evidence documents, JSON.
    Trivia,
}

#[derive(Args)]
pub struct IngestArgs {
    /// Raw dataset file.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub format: InputFormat,
    /// Directory for records.jsonl and rejections.json.
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Character budget for trivia evidence contexts.
    #[arg(long, default_value_t = 2000)]
    pub max_evidence_chars: usize,
}

pub fn run(args: IngestArgs) -> Result<i32> {
    let bytes = common::read_bytes(&args.input)?;
    let outcome = match args.format {
        InputFormat::Bbq => corpus::parse_bbq(&bytes)?,
        InputFormat::Squad => corpus::parse_squad(&bytes)?,
        InputFormat::Trivia => corpus::parse_trivia_with(
            &bytes,
            &TriviaOptions {
                max_evidence_chars: args.max_evidence_chars,
            },
        )?,
    };
    let (total, ambig, disambig) = outcome.counts();
    common::write_bytes(
        &args.out_dir.join("records.jsonl"),
        corpus::records_to_jsonl(&outcome.records)?.as_bytes(),
    )?;
    common::write_json_pretty(&args.out_dir.join("rejections.json"), &outcome.rejections)?;
    println!(
        "accepted {total} records ({ambig} ambiguous / {disambig} disambiguous), rejected {}",
        outcome.rejections.len()
    );
    Ok(0)
}
