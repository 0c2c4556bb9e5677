//! Shared plumbing for the subcommands: file IO with path context, the
//! scoring pipeline both `eval` and `score` run, and label conventions.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

use ambiq_core::corpus::{self, CorpusSlice, QARecord};
use ambiq_core::metrics::{
    aggregate_report, default_slice_names, score_records, MetricReport, ReinforceDenominator,
    ScoreIssue, ScoredResult,
};
use ambiq_core::modelclient::Prediction;
use ambiq_core::report::{render_tables, ReportFormat};
use ambiq_core::resources::resources;

pub fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).with_context(|| format!("reading {}", path.display()))
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)
            .with_context(|| format!("creating {}", parent.display()))?;
    }
    std::fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

pub fn write_json_pretty<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    write_bytes(path, &bytes)
}

/// Load canonical records, failing on any rejected line: records.jsonl is a
/// product of this tool, so damage means the file is not what it claims.
pub fn load_records(path: &Path) -> Result<Vec<QARecord>> {
    let outcome = corpus::parse_records_jsonl(&read_bytes(path)?)?;
    if let Some(first) = outcome.rejections.first() {
        anyhow::bail!(
            "{}: {} invalid lines (first: line {:?}: {})",
            path.display(),
            outcome.rejections.len(),
            first.line,
            first.reason
        );
    }
    Ok(outcome.records)
}

/// Resolve --identity-titles: the literal value "default" selects the
/// built-in title list.
pub fn identity_slice(
    records: &[QARecord],
    titles: Option<&[String]>,
) -> Option<CorpusSlice> {
    let titles = titles?;
    let resolved: Vec<String> = if titles.len() == 1 && titles[0] == "default" {
        corpus::DEFAULT_IDENTITY_TITLES
            .iter()
            .map(|s| s.to_string())
            .collect()
    } else {
        titles.to_vec()
    };
    let (identity, _) = corpus::partition_identity(records, &resolved);
    Some(identity)
}

pub struct ScoredArtifacts {
    pub results: Vec<ScoredResult>,
    pub issues: Vec<ScoreIssue>,
    pub report: MetricReport,
}

/// The one scoring path: join, score, aggregate. `eval` and `score` both
/// call this so their outputs are byte-compatible.
pub fn score_pipeline(
    records: &[QARecord],
    predictions: &[Prediction],
    identity_titles: Option<&[String]>,
    denominator: ReinforceDenominator,
    label: &str,
) -> ScoredArtifacts {
    let identity = identity_slice(records, identity_titles);
    let (results, issues) = score_records(
        records,
        predictions,
        identity.as_ref(),
        &resources().normalizer,
    );
    let report = aggregate_report(label, &results, &default_slice_names(&results), denominator);
    ScoredArtifacts {
        results,
        issues,
        report,
    }
}

pub fn scored_to_jsonl(results: &[ScoredResult]) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    for result in results {
        serde_json::to_writer(&mut out, result)?;
        out.push(b'\n');
    }
    Ok(out)
}

pub fn scored_from_jsonl(bytes: &[u8]) -> Result<Vec<ScoredResult>> {
    let text = std::str::from_utf8(bytes).context("scored results are not valid UTF-8")?;
    let mut results = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        results.push(
            serde_json::from_str(line)
                .with_context(|| format!("scored results line {}", idx + 1))?,
        );
    }
    Ok(results)
}

/// Write scored.jsonl, report.json, and report.md under `out_dir`.
pub fn write_scoring_outputs(out_dir: &Path, artifacts: &ScoredArtifacts) -> Result<()> {
    write_bytes(
        &out_dir.join("scored.jsonl"),
        &scored_to_jsonl(&artifacts.results)?,
    )?;
    write_bytes(
        &out_dir.join("report.json"),
        &render_tables(&artifacts.report, ReportFormat::Json)?,
    )?;
    write_bytes(
        &out_dir.join("report.md"),
        &render_tables(&artifacts.report, ReportFormat::Markdown)?,
    )?;
    Ok(())
}

/// One-line human summary of the three headline slices.
pub fn headline(report: &MetricReport) -> String {
    let cell = |key: &str| {
        report
            .slice(key)
            .and_then(|s| s.mean_emo_percent)
            .map(|v| format!("{v:.2}"))
            .unwrap_or_else(|| "-".into())
    };
    format!(
        "overall {} | ambig {} | disambig {}",
        cell("overall"),
        cell("ambig"),
        cell("disambig")
    )
}

pub fn run_dir_report(dir: &Path) -> Result<MetricReport> {
    let path = dir.join("report.json");
    let report = serde_json::from_slice(&read_bytes(&path)?)
        .with_context(|| format!("parsing {}", path.display()))?;
    Ok(report)
}

pub fn run_dir_metadata(dir: &Path) -> Option<serde_json::Value> {
    let bytes = std::fs::read(dir.join("run-metadata.json")).ok()?;
    serde_json::from_slice(&bytes).ok()
}

pub struct OutPath(pub PathBuf);

impl OutPath {
    /// Write to the file, or to stdout when the path is "-".
    pub fn write(&self, bytes: &[u8]) -> Result<()> {
        if self.0.as_os_str() == "-" {
            use std::io::Write;
            std::io::stdout().write_all(bytes)?;
            Ok(())
        } else {
            write_bytes(&self.0, bytes)
        }
    }
}
