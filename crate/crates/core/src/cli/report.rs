use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};

use super::{create_dir, write_json, CmdResult, Failure, EXIT_OK};
use crate::detector::SaliencyTarget;
use crate::evaluation::{aggregate, IofRecord, Region, SummaryStats};
use crate::render::violin_figure;

pub const SUMMARY_SCHEMA: &str = "odsg.summary/1";

#[derive(Debug, Args)]
pub(crate) struct ReportArgs {
    /// iof_records.json from `odsg validate` (a bare record array also works).
    #[arg(long)]
    records: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryFile {
    pub schema: String,
    #[serde(flatten)]
    pub stats: SummaryStats,
    /// Figure paths relative to the output directory.
    pub figures: Vec<String>,
}

fn read_records(path: &PathBuf) -> std::result::Result<Vec<IofRecord>, Failure> {
    let bad = |m: String| Failure::data(format!("{}: {m}", path.display()));
    let text = std::fs::read_to_string(path).map_err(|e| bad(e.to_string()))?;
    let mut value: serde_json::Value = serde_json::from_str(&text).map_err(|e| bad(e.to_string()))?;
    let records = if value.is_array() {
        value
    } else if let Some(r) = value.get_mut("records") {
        r.take()
    } else {
        return Err(bad("expected a records array or an object with `records`".into()));
    };
    serde_json::from_value(records).map_err(|e| bad(e.to_string()))
}

pub(crate) fn cmd_report(args: &ReportArgs) -> CmdResult {
    let records = read_records(&args.records)?;
    let stats = aggregate(&records);
    create_dir(&args.out)?;

    let mut figures = Vec::new();
    let mut save = |name: String, groups: &[&[f64]]| -> std::result::Result<(), Failure> {
        if groups.iter().all(|g| g.is_empty()) {
            return Ok(());
        }
        let path = args.out.join(&name);
        violin_figure(groups)
            .save(&path)
            .map_err(|e| Failure::data(format!("{}: {e}", path.display())))?;
        figures.push(name);
        Ok(())
    };
    for t in SaliencyTarget::ALL {
        let side = &stats.field(t, Region::target_side(t)).expect("field present").values;
        match Region::background(t).and_then(|bg| stats.field(t, bg)) {
            Some(bg) => save(format!("violin_{t}.png"), &[side, &bg.values])?,
            None => save(format!("violin_{t}.png"), &[side])?,
        }
    }
    save(
        "violin_pooled.png".into(),
        &[&stats.pooled_target.values, &stats.pooled_background.values],
    )?;

    println!("records: {}", stats.record_count);
    for (key, f) in &stats.fields {
        match f.median {
            Some(m) => println!("{key:>18}  n={:<5} median={m:.3}", f.count),
            None => println!("{key:>18}  n=0"),
        }
    }
    let file = SummaryFile {
        schema: SUMMARY_SCHEMA.into(),
        stats,
        figures,
    };
    write_json(&args.out.join("summary.json"), &file)?;
    Ok(EXIT_OK)
}
