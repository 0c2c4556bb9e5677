use std::path::PathBuf;

use anyhow::Result;
use clap::Args;
use serde_json::json;

use ambiq_core::modelclient::predictions_from_jsonl;
use ambiq_core::resources::resources;

use super::DenominatorArg;
use crate::common;

#[derive(Args)]
pub struct ScoreArgs {
    /// Canonical records JSONL from `ingest`.
    #[arg(long)]
    pub records: PathBuf,
    /// predictions.jsonl from a previous `eval` (or a compatible producer).
    #[arg(long)]
    pub predictions: PathBuf,
    /// Comma-separated topic titles for the identity slice; "default"
    /// selects the built-in list.
    #[arg(long, value_delimiter = ',')]
    pub identity_titles: Option<Vec<String>>,
    #[arg(long, value_enum, default_value = "errors-only")]
    pub denominator: DenominatorArg,
    #[arg(long, default_value = "scored")]
    pub label: String,
    #[arg(long)]
    pub out_dir: PathBuf,
}

pub fn run(args: ScoreArgs) -> Result<i32> {
    let records = common::load_records(&args.records)?;
    let predictions = predictions_from_jsonl(&common::read_bytes(&args.predictions)?)?;
    let artifacts = common::score_pipeline(
        &records,
        &predictions,
        args.identity_titles.as_deref(),
        args.denominator.into(),
        &args.label,
    );
    common::write_scoring_outputs(&args.out_dir, &artifacts)?;
    let metadata = json!({
        "command": "score",
        "label": args.label,
        "denominator": match args.denominator {
            DenominatorArg::ErrorsOnly => "errors-only",
            DenominatorArg::AllPredictions => "all-predictions",
        },
        "identity_titles": args.identity_titles,
        "counts": {
            "records": records.len(),
            "predictions": predictions.len(),
            "score_issues": artifacts.issues.len(),
        },
        "score_issues": artifacts.issues,
        "resource_checksums": resources().checksums,
    });
    common::write_json_pretty(&args.out_dir.join("run-metadata.json"), &metadata)?;
    println!(
        "{} records, {} predictions, {} issues; {}",
        records.len(),
        predictions.len(),
        artifacts.issues.len(),
        common::headline(&artifacts.report)
    );
    Ok(0)
}
