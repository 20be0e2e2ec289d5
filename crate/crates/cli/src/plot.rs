//! `plot`: turn run artifacts into `(t, ln V)` data plus the fitted line.

use std::fs;
use std::path::{Path, PathBuf};

use bilayer_core::simulator::{fit_log_linear, RateFit};

use crate::error::CliError;
use crate::run::{SUMMARY_FILE, TRAJECTORY_FILE};

pub const PLOT_FILE: &str = "plot.csv";
pub const PLOT_HEADER: [&str; 4] = ["time", "V", "ln_V", "fitted_ln_V"];

#[derive(Debug, Clone, PartialEq)]
pub struct PlotData {
    /// `(t, V)` per trajectory sample.
    pub points: Vec<(f64, f64)>,
    /// `None` when too few samples lie above the fit floor.
    pub fit: Option<RateFit>,
}

/// Reads `trajectory.csv` from a run directory. `summary.json` must exist
/// alongside it.
pub fn load(run_dir: &Path) -> Result<PlotData, CliError> {
    let summary = run_dir.join(SUMMARY_FILE);
    if !summary.is_file() {
        return Err(missing(summary));
    }
    let path = run_dir.join(TRAJECTORY_FILE);
    if !path.is_file() {
        return Err(missing(path));
    }
    let artifact = |message: String| CliError::Artifact { path: path.clone(), message };
    let mut reader = csv::Reader::from_path(&path).map_err(|e| artifact(e.to_string()))?;
    let headers = reader.headers().map_err(|e| artifact(e.to_string()))?.clone();
    let column = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| artifact(format!("missing column `{name}`")))
    };
    let (ti, vi) = (column("time")?, column("V")?);
    let mut points = Vec::new();
    for (k, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| artifact(e.to_string()))?;
        let field = |i: usize| -> Result<f64, CliError> {
            rec.get(i)
                .and_then(|s| s.parse::<f64>().ok())
                .filter(|x| x.is_finite())
                .ok_or_else(|| artifact(format!("row {}: bad number in column {}", k + 2, headers.get(i).unwrap_or("?"))))
        };
        points.push((field(ti)?, field(vi)?));
    }
    if points.is_empty() {
        return Err(artifact("trajectory has no samples".into()));
    }
    Ok(PlotData { fit: fit_log_linear(&points).ok(), points })
}

fn missing(path: PathBuf) -> CliError {
    CliError::Artifact { path, message: "missing run artifact".into() }
}

/// Writes `plot.csv` into the run directory. The file appears complete or
/// not at all.
pub fn emit(run_dir: &Path) -> Result<(PathBuf, PlotData), CliError> {
    let data = load(run_dir)?;
    let target = run_dir.join(PLOT_FILE);
    let tmp = run_dir.join(format!(".{PLOT_FILE}.tmp"));
    let result = write_plot(&tmp, &data).and_then(|()| fs::rename(&tmp, &target).map_err(|e| CliError::io(&target, e)));
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result.map(|()| (target, data))
}

fn write_plot(path: &Path, data: &PlotData) -> Result<(), CliError> {
    let csv_err = |e: csv::Error| CliError::Artifact { path: path.to_path_buf(), message: e.to_string() };
    let window_end = data.fit.map(|_| {
        data.points.iter().rposition(|p| p.1 > bilayer_core::simulator::FIT_FLOOR).unwrap_or(0)
    });
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(PLOT_HEADER).map_err(csv_err)?;
    for (k, &(t, v)) in data.points.iter().enumerate() {
        let ln_v = if v > 0.0 { v.ln().to_string() } else { String::new() };
        let fitted = match (data.fit, window_end) {
            (Some(f), Some(end)) if k <= end => (f.intercept + f.slope * t).to_string(),
            _ => String::new(),
        };
        w.write_record([t.to_string(), v.to_string(), ln_v, fitted]).map_err(csv_err)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}
