//! File emission. Every float is written with 17 significant digits so that
//! a CSV round trip is exact.

use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::error::{io_err, CliError, Result};

pub const SCHEME_CSV: &str = "scheme.csv";
pub const VOLTAGE_CSV: &str = "voltage.csv";
pub const SPECTRUM_CSV: &str = "spectrum.csv";
pub const FILTERED_CSV: &str = "filtered.csv";
pub const REPORT_JSON: &str = "report.json";
pub const THD_JSON: &str = "thd.json";
pub const ORACLE_JSON: &str = "oracle.json";

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_csv<I>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(|e| csv_err(path, e))?;
    w.write_record(header).map_err(|e| csv_err(path, e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(io_err(format!("writing {}", path.display())))
}

fn csv_err(path: &Path, e: csv::Error) -> CliError {
    CliError::Io { context: format!("writing {}", path.display()), source: std::io::Error::other(e.to_string()) }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("report types serialise");
    text.push('\n');
    fs::write(path, text).map_err(io_err(format!("writing {}", path.display())))
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(io_err(format!("creating {}", dir.display())))
}

/// `index,theta,v`
pub fn write_waveform(path: &Path, theta: &[f64], v: &[f64]) -> Result<()> {
    write_csv(
        path,
        &["index", "theta", "v"],
        theta.iter().zip(v).enumerate().map(|(i, (t, x))| vec![i.to_string(), fmt_f64(*t), fmt_f64(*x)]),
    )
}

/// `k,amplitude`
pub fn write_spectrum(path: &Path, amplitudes: &[f64]) -> Result<()> {
    write_csv(path, &["k", "amplitude"], amplitudes.iter().enumerate().map(|(k, a)| vec![k.to_string(), fmt_f64(*a)]))
}

/// `index,t_seconds,v`
pub fn write_filtered(path: &Path, dt: f64, v: &[f64]) -> Result<()> {
    write_csv(
        path,
        &["index", "t_seconds", "v"],
        v.iter().enumerate().map(|(i, x)| vec![i.to_string(), fmt_f64(i as f64 * dt), fmt_f64(*x)]),
    )
}

/// Removes files left over from an earlier run in the same directory.
pub fn remove_stale(dir: &Path, names: &[&str]) -> Result<()> {
    for name in names {
        let p = dir.join(name);
        if p.exists() {
            fs::remove_file(&p).map_err(io_err(format!("removing {}", p.display())))?;
        }
    }
    Ok(())
}
