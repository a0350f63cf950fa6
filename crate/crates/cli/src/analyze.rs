//! The `analyze` command: spectrum, THD and optional RL filtering of an
//! arbitrary one-period waveform.

use std::path::{Path, PathBuf};

use rectiplan_core::{dft_spectrum, ripple_stats, rl_filter, thd, FilterConfig, RippleStats, ThdReport};
use serde::Serialize;

use crate::error::{CliError, Result};
use crate::output::{self, FILTERED_CSV, SPECTRUM_CSV, THD_JSON};

#[derive(Debug, Clone, Serialize)]
pub struct AnalyzeReport {
    pub n: usize,
    #[serde(flatten)]
    pub thd: ThdReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub filter: Option<FilteredSummary>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FilteredSummary {
    pub r_ohms: f64,
    pub l_henries: f64,
    pub f0_hz: f64,
    pub settle_periods: usize,
    pub cutoff_hz: f64,
    /// `mean_error` is measured against the mean of the input.
    pub ripple: RippleStats,
}

#[derive(Debug, Clone)]
pub struct AnalyzeRequest {
    pub input: PathBuf,
    pub desired: Vec<usize>,
    pub filter: Option<FilterConfig>,
    pub output_dir: PathBuf,
}

/// Reads the sample column of a waveform CSV. A header row is optional;
/// with one, the `v` column is used when present and the last column
/// otherwise.
pub fn read_waveform(path: &Path) -> Result<Vec<f64>> {
    let bad = |msg: String| CliError::BadCsv { path: path.to_path_buf(), msg };
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(false)
        .from_path(path)
        .map_err(|e| bad(e.to_string()))?;
    let mut records = rdr.records();
    let Some(first) = records.next() else {
        return Err(bad("file is empty".into()));
    };
    let first = first.map_err(|e| bad(e.to_string()))?;
    let numeric = first.iter().all(|f| f.parse::<f64>().is_ok());
    let column = if numeric { first.len() - 1 } else { first.iter().position(|h| h == "v").unwrap_or(first.len() - 1) };
    let parse = |line: usize, rec: &csv::StringRecord| -> Result<f64> {
        let field = rec.get(column).unwrap_or("");
        field
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| bad(format!("row {line}: `{field}` is not a finite number")))
    };
    let mut samples = Vec::new();
    if numeric {
        samples.push(parse(1, &first)?);
    }
    for (i, rec) in records.enumerate() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        samples.push(parse(i + 2, &rec)?);
    }
    if samples.len() < 2 {
        return Err(bad(format!("need at least 2 samples, found {}", samples.len())));
    }
    Ok(samples)
}

pub fn run_analyze(req: &AnalyzeRequest) -> Result<AnalyzeReport> {
    let v = read_waveform(&req.input)?;
    let spectrum = dft_spectrum(&v)?;
    let thd = thd(&v, &req.desired)?;
    output::ensure_dir(&req.output_dir)?;
    output::write_spectrum(&req.output_dir.join(SPECTRUM_CSV), &spectrum.amplitudes)?;

    let filter = match &req.filter {
        Some(cfg) => {
            let filtered = rl_filter(&v, cfg)?;
            let mean = v.iter().sum::<f64>() / v.len() as f64;
            let dt = 1.0 / (v.len() as f64 * cfg.f0_hz);
            output::write_filtered(&req.output_dir.join(FILTERED_CSV), dt, &filtered)?;
            Some(FilteredSummary {
                r_ohms: cfg.r_ohms,
                l_henries: cfg.l_henries,
                f0_hz: cfg.f0_hz,
                settle_periods: cfg.settle_periods,
                cutoff_hz: cfg.cutoff_hz(),
                ripple: ripple_stats(&filtered, mean)?,
            })
        }
        None => None,
    };
    let report = AnalyzeReport { n: v.len(), thd, filter };
    output::write_json(&req.output_dir.join(THD_JSON), &report)?;
    Ok(report)
}
