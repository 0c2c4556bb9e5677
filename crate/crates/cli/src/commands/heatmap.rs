use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::Result;
use clap::Args;

use ambiq_core::error::Error;
use ambiq_core::report::{heatmap_grid, heatmap_svg, HeatmapContext};

use crate::common;

#[derive(Args)]
pub struct HeatmapArgs {
    /// Run directories, each holding a report.json; columns are labeled by
    /// the report labels.
    #[arg(long, required = true, num_args = 1..)]
    pub runs: Vec<PathBuf>,
    /// overall, ambig, or disambig.
    #[arg(long, default_value = "overall", value_parser = parse_context)]
    pub context: HeatmapContext,
    /// Directory for heatmap.svg and heatmap.json.
    #[arg(long)]
    pub out_dir: PathBuf,
}

fn parse_context(s: &str) -> std::result::Result<HeatmapContext, Error> {
    s.parse()
}

pub fn run(args: HeatmapArgs) -> Result<i32> {
    let mut reports = BTreeMap::new();
    for dir in &args.runs {
        let report = common::run_dir_report(dir)?;
        if reports.insert(report.label.clone(), report).is_some() {
            return Err(Error::Config(format!(
                "two runs share the label found in {}; relabel one",
                dir.display()
            ))
            .into());
        }
    }
    let grid = heatmap_grid(&reports, args.context);
    common::write_bytes(&args.out_dir.join("heatmap.svg"), heatmap_svg(&grid).as_bytes())?;
    common::write_json_pretty(&args.out_dir.join("heatmap.json"), &grid)?;
    println!(
        "heatmap over {} models x {} dimensions written",
        grid.columns.len(),
        grid.rows.len()
    );
    Ok(0)
}
