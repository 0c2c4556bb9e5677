use std::path::PathBuf;

use anyhow::Result;
use clap::Args;

use ambiq_core::report::{compare_csv, compare_markdown, compare_row};

use crate::common;

#[derive(Args)]
pub struct CompareArgs {
    /// Run directories, each holding report.json (and ideally
    /// run-metadata.json for model/method columns).
    #[arg(long, required = true, num_args = 1..)]
    pub runs: Vec<PathBuf>,
    /// Directory for compare.md and compare.csv.
    #[arg(long)]
    pub out_dir: PathBuf,
}

pub fn run(args: CompareArgs) -> Result<i32> {
    let mut rows = Vec::new();
    for dir in &args.runs {
        let report = common::run_dir_report(dir)?;
        let metadata = common::run_dir_metadata(dir);
        let field = |key: &str| -> Option<String> {
            metadata
                .as_ref()
                .and_then(|m| m.get(key))
                .and_then(|v| v.as_str())
                .map(str::to_string)
        };
        let model = field("model").unwrap_or_else(|| report.label.clone());
        let method = field("method").unwrap_or_else(|| "-".into());
        rows.push(compare_row(&model, &method, &report));
    }
    common::write_bytes(
        &args.out_dir.join("compare.md"),
        compare_markdown(&rows).as_bytes(),
    )?;
    common::write_bytes(
        &args.out_dir.join("compare.csv"),
        compare_csv(&rows).as_bytes(),
    )?;
    println!("compared {} runs", rows.len());
    Ok(0)
}
