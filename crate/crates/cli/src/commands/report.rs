use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;

use ambiq_core::error::Error;
use ambiq_core::metrics::{aggregate_report, default_slice_names, MetricReport};
use ambiq_core::report::{render_tables, ReportFormat};

use super::DenominatorArg;
use crate::common;

#[derive(Args)]
pub struct ReportArgs {
    /// Re-render an existing report.json.
    #[arg(long, conflicts_with = "scored")]
    pub report: Option<PathBuf>,
    /// Aggregate raw scored.jsonl results instead.
    #[arg(long)]
    pub scored: Option<PathBuf>,
    /// Label for reports aggregated from --scored.
    #[arg(long, default_value = "report")]
    pub label: String,
    #[arg(long, value_enum, default_value = "errors-only")]
    pub denominator: DenominatorArg,
    /// json, csv, or markdown.
    #[arg(long, default_value = "markdown", value_parser = parse_format)]
    pub format: ReportFormat,
    /// Output file; "-" for stdout.
    #[arg(long, default_value = "-")]
    pub out: PathBuf,
}

fn parse_format(s: &str) -> std::result::Result<ReportFormat, Error> {
    s.parse()
}

pub fn run(args: ReportArgs) -> Result<i32> {
    let report: MetricReport = match (&args.report, &args.scored) {
        (Some(path), None) => serde_json::from_slice(&common::read_bytes(path)?)
            .with_context(|| format!("parsing {}", path.display()))?,
        (None, Some(path)) => {
            let results = common::scored_from_jsonl(&common::read_bytes(path)?)?;
            aggregate_report(
                &args.label,
                &results,
                &default_slice_names(&results),
                args.denominator.into(),
            )
        }
        _ => return Err(Error::Config("pass exactly one of --report or --scored".into()).into()),
    };
    common::OutPath(args.out).write(&render_tables(&report, args.format)?)?;
    Ok(0)
}
