//! Table and curve generation from a directory of run outputs.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use lieposenet::metrics::{aggregate, format_table, FormattedTable, MetricsReport, SceneReport};

use crate::error::{CliError, Result};
use crate::runner::{EpochRow, RunSummary};

pub const TABLE_FILE: &str = "report.txt";
pub const TABLE_CSV_FILE: &str = "report.csv";
pub const CURVES_FILE: &str = "curves.csv";
pub const CURVES_HEADER: &str = "method,epoch,avg_median_rot_deg";

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub table: FormattedTable,
    pub curves_csv: String,
}

/// Every `*.json` run summary in `dir`, ordered by file name.
pub fn load_summaries(dir: &Path) -> Result<Vec<RunSummary>> {
    let entries = std::fs::read_dir(dir).map_err(|e| CliError::io(dir, e))?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    let mut out = Vec::with_capacity(paths.len());
    for path in paths {
        let text = std::fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
        let summary: RunSummary = serde_json::from_str(&text)
            .map_err(|e| CliError::Report(format!("{}: not a run summary: {e}", path.display())))?;
        out.push(summary);
    }
    if out.is_empty() {
        return Err(CliError::Report(format!("{}: no run summaries found", dir.display())));
    }
    Ok(out)
}

fn read_curve(dir: &Path, summary: &RunSummary) -> Result<Vec<EpochRow>> {
    let path = dir.join(&summary.epochs_file);
    let mut reader = csv::Reader::from_path(&path).map_err(|e| CliError::Report(format!("{}: {e}", path.display())))?;
    let rows = reader
        .deserialize()
        .collect::<std::result::Result<Vec<EpochRow>, _>>()
        .map_err(|e| CliError::Report(format!("{}: {e}", path.display())))?;
    Ok(rows)
}

/// Groups summaries by method, with scenes in config order.
fn by_method(summaries: &[RunSummary]) -> Result<BTreeMap<&str, Vec<&RunSummary>>> {
    let mut groups: BTreeMap<&str, Vec<&RunSummary>> = BTreeMap::new();
    for s in summaries {
        groups.entry(s.method.as_str()).or_default().push(s);
    }
    for (method, runs) in groups.iter_mut() {
        runs.sort_by(|a, b| (a.scene_index, &a.scene).cmp(&(b.scene_index, &b.scene)));
        if let Some(w) = runs.windows(2).find(|w| w[0].scene == w[1].scene) {
            return Err(CliError::Report(format!(
                "method '{method}' has several runs for scene '{}': {} and {}",
                w[0].scene, w[0].run_id, w[1].run_id
            )));
        }
    }
    Ok(groups)
}

/// Median-error table over methods and scenes plus the scene-averaged
/// rotation curve of every method. Epochs missing from any scene of a
/// method are left out of its curve.
pub fn build_report(dir: &Path, summaries: &[RunSummary]) -> Result<Report> {
    let groups = by_method(summaries)?;
    let mut reports: Vec<(String, MetricsReport)> = Vec::with_capacity(groups.len());
    let mut curves_csv = String::new();
    let _ = writeln!(curves_csv, "{CURVES_HEADER}");

    for (method, runs) in &groups {
        let scenes = runs
            .iter()
            .map(|s| SceneReport {
                scene_name: s.scene.clone(),
                median_rot_deg: s.final_metrics.median_rot_deg,
                median_trans_m: s.final_metrics.median_trans_m,
                n_samples: s.final_metrics.n_samples,
            })
            .collect();
        let report = aggregate(scenes).map_err(|e| CliError::core(format!("method {method}"), e))?;
        reports.push((method.to_string(), report));

        let curves = runs
            .iter()
            .map(|s| read_curve(dir, s))
            .collect::<Result<Vec<_>>>()?;
        let common = curves.iter().map(Vec::len).min().unwrap_or(0);
        for e in 0..common {
            let epoch = curves[0][e].epoch;
            if curves.iter().any(|c| c[e].epoch != epoch) {
                return Err(CliError::Report(format!("method '{method}': epoch rows are out of order")));
            }
            let avg = curves.iter().map(|c| c[e].median_rot_deg).sum::<f64>() / curves.len() as f64;
            let _ = writeln!(curves_csv, "{method},{epoch},{avg}");
        }
    }

    let table = format_table(&reports).map_err(|e| match e {
        lieposenet::Error::SceneMismatch(pairs) => CliError::Report(format!("scene sets differ across methods: {pairs}")),
        other => CliError::core("table", other),
    })?;
    Ok(Report { table, curves_csv })
}

/// Writes the table text, the table CSV and the curve CSV into `out_dir`.
pub fn write_report(out_dir: &Path, report: &Report) -> Result<()> {
    std::fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;
    for (name, body) in [
        (TABLE_FILE, &report.table.text),
        (TABLE_CSV_FILE, &report.table.csv),
        (CURVES_FILE, &report.curves_csv),
    ] {
        let path = out_dir.join(name);
        std::fs::write(&path, body).map_err(|e| CliError::io(&path, e))?;
    }
    Ok(())
}
