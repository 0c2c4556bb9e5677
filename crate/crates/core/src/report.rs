//! Report rendering: per-slice tables in JSON, CSV, or Markdown, a
//! dimension-by-model heatmap as SVG, and side-by-side comparisons.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::Dimension;
use crate::error::{Error, Result};
use crate::metrics::MetricReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Json,
    Csv,
    Markdown,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            other => Err(Error::Config(format!(
                "unknown report format '{other}' (expected json, csv, or markdown)"
            ))),
        }
    }
}

fn fmt_mean(mean: Option<f64>) -> String {
    match mean {
        Some(v) => format!("{v:.2}"),
        None => "-".into(),
    }
}

const CSV_HEADER: &str =
    "slice,count,mean_emo_percent,bias_reinforce_percent,n_reinforcing,n_other,empty_denominator";

/// Serialize a report in the requested format. CSV quotes nothing because
/// slice keys never contain commas; JSON round-trips through serde.
pub fn render_tables(report: &MetricReport, format: ReportFormat) -> Result<Vec<u8>> {
    match format {
        ReportFormat::Json => {
            let mut bytes = serde_json::to_vec_pretty(report)?;
            bytes.push(b'\n');
            Ok(bytes)
        }
        ReportFormat::Csv => {
            let mut out = String::from(CSV_HEADER);
            out.push('\n');
            for (name, slice) in &report.slices {
                let _ = writeln!(
                    out,
                    "{},{},{},{:.2},{},{},{}",
                    name,
                    slice.count,
                    slice.mean_emo_percent.map(|v| format!("{v:.2}")).unwrap_or_default(),
                    slice.bias_reinforce_percent,
                    slice.n_reinforcing,
                    slice.n_other,
                    slice.empty_denominator,
                );
            }
            Ok(out.into_bytes())
        }
        ReportFormat::Markdown => {
            let mut out = format!("# {}\n\n", report.label);
            out.push_str("| Slice | Count | Mean EMO % | Bias reinforce % | Reinforcing | Other |\n");
            out.push_str("|---|---:|---:|---:|---:|---:|\n");
            for (name, slice) in &report.slices {
                let reinforce = if slice.empty_denominator {
                    "-".to_string()
                } else {
                    format!("{:.2}", slice.bias_reinforce_percent)
                };
                let _ = writeln!(
                    out,
                    "| {} | {} | {} | {} | {} | {} |",
                    name,
                    slice.count,
                    fmt_mean(slice.mean_emo_percent),
                    reinforce,
                    slice.n_reinforcing,
                    slice.n_other,
                );
            }
            Ok(out.into_bytes())
        }
    }
}

/// Which part of the corpus a heatmap cell averages over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HeatmapContext {
    Overall,
    Ambiguous,
    Disambiguous,
}

impl HeatmapContext {
    fn slice_key(self, dimension: Dimension) -> String {
        match self {
            HeatmapContext::Overall => format!("dim:{}", dimension.name()),
            HeatmapContext::Ambiguous => format!("dim:{}:ambig", dimension.name()),
            HeatmapContext::Disambiguous => format!("dim:{}:disambig", dimension.name()),
        }
    }
}

impl FromStr for HeatmapContext {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "overall" => Ok(HeatmapContext::Overall),
            "ambig" | "ambiguous" => Ok(HeatmapContext::Ambiguous),
            "disambig" | "disambiguous" => Ok(HeatmapContext::Disambiguous),
            other => Err(Error::Config(format!(
                "unknown heatmap context '{other}' (expected overall, ambig, or disambig)"
            ))),
        }
    }
}

/// Mean EMO per (dimension, model), as fractions in [0, 1]. Cells are None
/// when a model's report has no data for that dimension and context.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HeatmapGrid {
    pub context: HeatmapContext,
    /// Dimension names, fixed order.
    pub rows: Vec<String>,
    /// Model labels, sorted.
    pub columns: Vec<String>,
    /// cells[row][column].
    pub cells: Vec<Vec<Option<f64>>>,
}

/// Assemble the grid from one report per model, keyed by model label.
pub fn heatmap_grid(
    reports: &BTreeMap<String, MetricReport>,
    context: HeatmapContext,
) -> HeatmapGrid {
    let columns: Vec<String> = reports.keys().cloned().collect();
    let mut rows = Vec::new();
    let mut cells = Vec::new();
    for dimension in Dimension::ALL {
        let key = context.slice_key(dimension);
        rows.push(dimension.name().to_string());
        cells.push(
            columns
                .iter()
                .map(|model| {
                    reports[model]
                        .slice(&key)
                        .and_then(|s| s.mean_emo_percent)
                        .map(|pct| pct / 100.0)
                })
                .collect(),
        );
    }
    HeatmapGrid { context, rows, columns, cells }
}

fn heat_color(fraction: f64) -> String {
    // White at 0 to a steel blue at 1.
    let f = fraction.clamp(0.0, 1.0);
    let mix = |from: f64, to: f64| (from + (to - from) * f).round() as u8;
    format!("rgb({},{},{})", mix(255.0, 31.0), mix(255.0, 119.0), mix(255.0, 180.0))
}

/// Render the grid as a self-contained SVG document.
pub fn heatmap_svg(grid: &HeatmapGrid) -> String {
    const CELL_W: usize = 86;
    const CELL_H: usize = 30;
    const LABEL_W: usize = 110;
    let width = LABEL_W + CELL_W * grid.columns.len();
    let height = CELL_H * (grid.rows.len() + 1);
    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" \
         font-family=\"sans-serif\" font-size=\"12\">\n"
    );
    let _ = writeln!(
        svg,
        "<rect width=\"{width}\" height=\"{height}\" fill=\"white\"/>"
    );
    for (c, model) in grid.columns.iter().enumerate() {
        let x = LABEL_W + c * CELL_W + CELL_W / 2;
        let _ = writeln!(
            svg,
            "<text x=\"{x}\" y=\"{}\" text-anchor=\"middle\">{}</text>",
            CELL_H / 2 + 5,
            xml_escape(model)
        );
    }
    for (r, row) in grid.rows.iter().enumerate() {
        let y = (r + 1) * CELL_H;
        let _ = writeln!(
            svg,
            "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>",
            LABEL_W - 8,
            y + CELL_H / 2 + 5,
            xml_escape(row)
        );
        for (c, cell) in grid.cells[r].iter().enumerate() {
            let x = LABEL_W + c * CELL_W;
            let (fill, text, text_fill) = match cell {
                Some(f) => (
                    heat_color(*f),
                    format!("{:.1}", f * 100.0),
                    if *f > 0.6 { "white" } else { "black" },
                ),
                None => ("#eeeeee".to_string(), "-".to_string(), "black"),
            };
            let _ = writeln!(
                svg,
                "<rect x=\"{x}\" y=\"{y}\" width=\"{CELL_W}\" height=\"{CELL_H}\" \
                 fill=\"{fill}\" stroke=\"#999\"/>"
            );
            let _ = writeln!(
                svg,
                "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" fill=\"{text_fill}\">{text}</text>",
                x + CELL_W / 2,
                y + CELL_H / 2 + 5,
            );
        }
    }
    svg.push_str("</svg>\n");
    svg
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// One line of a model/method comparison, percentages as reported.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompareRow {
    pub model: String,
    pub method: String,
    pub overall: Option<f64>,
    pub ambig: Option<f64>,
    pub disambig: Option<f64>,
}

/// Pull the three headline numbers out of a report.
pub fn compare_row(model: &str, method: &str, report: &MetricReport) -> CompareRow {
    let mean = |key: &str| report.slice(key).and_then(|s| s.mean_emo_percent);
    CompareRow {
        model: model.to_string(),
        method: method.to_string(),
        overall: mean("overall"),
        ambig: mean("ambig"),
        disambig: mean("disambig"),
    }
}

pub fn compare_markdown(rows: &[CompareRow]) -> String {
    let mut out = String::from("| Model | Method | Overall | Ambig | Disambig |\n");
    out.push_str("|---|---|---:|---:|---:|\n");
    for row in rows {
        let _ = writeln!(
            out,
            "| {} | {} | {} | {} | {} |",
            row.model,
            row.method,
            fmt_mean(row.overall),
            fmt_mean(row.ambig),
            fmt_mean(row.disambig),
        );
    }
    out
}

pub fn compare_csv(rows: &[CompareRow]) -> String {
    let mut out = String::from("model,method,overall,ambig,disambig\n");
    for row in rows {
        let cell = |v: Option<f64>| v.map(|x| format!("{x:.2}")).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            row.model,
            row.method,
            cell(row.overall),
            cell(row.ambig),
            cell(row.disambig),
        );
    }
    out
}
