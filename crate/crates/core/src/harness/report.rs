//! Writes run summaries to disk: CSV, aggregate CSV, SVG charts and a
//! metadata file.

use std::path::Path;

use serde_json::json;

use super::experiments::RunSummary;
use super::svg::render;
use super::{HarnessError, Result};

fn write(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| HarnessError::io(path, e))
}

/// Writes `<exp>.csv`, `<exp>_summary.csv`, one SVG per chart and
/// `metadata.json` into `out_dir`, creating it if needed. Returns the paths
/// written.
pub fn emit_report(summaries: &[RunSummary], out_dir: &Path) -> Result<Vec<std::path::PathBuf>> {
    if summaries.is_empty() {
        return Err(HarnessError::Usage("nothing to report".into()));
    }
    std::fs::create_dir_all(out_dir).map_err(|e| HarnessError::io(out_dir, e))?;
    let mut written = Vec::new();
    let mut runs = Vec::new();
    for s in summaries {
        let name = s.experiment.as_str();
        let csv = out_dir.join(format!("{name}.csv"));
        write(&csv, &s.csv)?;
        let summary = out_dir.join(format!("{name}_summary.csv"));
        write(&summary, &s.summary_csv())?;
        written.extend([csv, summary]);
        let mut charts = Vec::new();
        for (stem, chart) in &s.charts {
            let path = out_dir.join(format!("{stem}.svg"));
            write(&path, &render(chart))?;
            charts.push(format!("{stem}.svg"));
            written.push(path);
        }
        let p = &s.provenance;
        runs.push(json!({
            "experiment": name,
            "config_hash": p.config_hash,
            "master_seed": p.master_seed,
            "seeds": p.seeds,
            "code_version": p.code_version,
            "notes": p.notes,
            "charts": charts,
        }));
    }
    let meta = out_dir.join("metadata.json");
    let text = serde_json::to_string_pretty(&json!({ "runs": runs })).expect("metadata serializes");
    write(&meta, &(text + "\n"))?;
    written.push(meta);
    Ok(written)
}
