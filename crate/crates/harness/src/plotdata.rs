//! Long-format plot data from a directory of traces.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{HarnessError, Result};
use crate::trace::{read_trace_csv, TRACE_HEADER};

pub const DEFAULT_METRICS: [&str; 3] = ["loss", "grad_norm", "gamma"];

#[derive(Debug, Default)]
pub struct PlotData {
    pub rows: usize,
    pub skipped: Vec<(PathBuf, String)>,
}

/// `(variant, seed)` from a `{variant}__seed{seed}.trace.csv` file name.
pub fn parse_trace_name(path: &Path) -> Option<(String, u64)> {
    let name = path.file_name()?.to_str()?.strip_suffix(".trace.csv")?;
    let (variant, seed) = name.rsplit_once("__seed")?;
    Some((variant.to_string(), seed.parse().ok()?))
}

pub fn validate_metrics(metrics: &[String]) -> Result<()> {
    for m in metrics {
        if m == "t" || !TRACE_HEADER.contains(&m.as_str()) {
            return Err(HarnessError::config(format!("unknown metric `{m}`")));
        }
    }
    Ok(())
}

/// Writes `variant,seed,t,metric,value` rows for every readable trace in `dir`,
/// in file-name order. Unreadable traces are reported back, not fatal.
pub fn emit_plot_data<W: Write>(dir: &Path, metrics: &[String], mut out: W) -> Result<PlotData> {
    validate_metrics(metrics)?;
    let entries = fs::read_dir(dir).map_err(|e| HarnessError::io(dir, e))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.to_str().is_some_and(|s| s.ends_with(".trace.csv")))
        .collect();
    files.sort();
    let io = |e| HarnessError::io("plot data output", e);
    writeln!(out, "variant,seed,t,metric,value").map_err(io)?;
    let mut report = PlotData::default();
    for path in files {
        let Some((variant, seed)) = parse_trace_name(&path) else {
            report.skipped.push((path, "file name is not {variant}__seed{seed}.trace.csv".into()));
            continue;
        };
        let rows = match fs::File::open(&path).map_err(csv::Error::from).and_then(read_trace_csv) {
            Ok(rows) => rows,
            Err(e) => {
                report.skipped.push((path, e.to_string()));
                continue;
            }
        };
        for r in &rows {
            for m in metrics {
                let v = r.metric(m).unwrap_or(f64::NAN);
                writeln!(out, "{variant},{seed},{},{m},{v}", r.t).map_err(io)?;
                report.rows += 1;
            }
        }
    }
    Ok(report)
}
