//! Deterministic tabular output and atomic file writes.
//!
//! Numbers are printed with 17 significant digits in scientific notation,
//! which round-trips every f64 and does not depend on locale.

use crate::error::Result;
use crate::scatter::AmplitudeTable;
use crate::threed::AmplitudeTable3d;
use serde::Serialize;
use std::fs;
use std::io::Write;
use std::path::Path;

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// CSV text with `#`-prefixed comment lines, a header row and numeric rows.
pub fn csv_string(comments: &[String], columns: &[&str], rows: &[Vec<f64>]) -> String {
    let mut s = String::new();
    for c in comments {
        for line in c.lines() {
            s.push_str("# ");
            s.push_str(line);
            s.push('\n');
        }
    }
    s.push_str(&columns.join(","));
    s.push('\n');
    for r in rows {
        let cells: Vec<String> = r.iter().map(|&v| fmt_f64(v)).collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    s
}

pub const AMPLITUDE_COLUMNS: [&str; 4] = ["theta_rad", "re_f", "im_f", "abs2_f"];
pub const AMPLITUDE_3D_COLUMNS: [&str; 5] = ["theta_rad", "phi_rad", "re_f", "im_f", "abs2_f"];

pub fn amplitude_rows(t: &AmplitudeTable) -> Vec<Vec<f64>> {
    t.thetas
        .iter()
        .zip(&t.values)
        .map(|(&th, f)| vec![th, f.re, f.im, f.norm_sqr()])
        .collect()
}

pub fn amplitude_3d_rows(t: &AmplitudeTable3d) -> Vec<Vec<f64>> {
    t.directions
        .iter()
        .zip(&t.values)
        .map(|(d, f)| vec![d.theta, d.phi, f.re, f.im, f.norm_sqr()])
        .collect()
}

/// Write through a temporary file in the same directory, then rename over
/// the target, so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".into());
    let tmp = dir.join(format!(".{name}.tmp-{}", std::process::id()));
    let res = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if res.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    Ok(res?)
}

pub fn write_csv(
    path: &Path,
    comments: &[String],
    columns: &[&str],
    rows: &[Vec<f64>],
) -> Result<()> {
    write_atomic(path, csv_string(comments, columns, rows).as_bytes())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)
        .map_err(|e| crate::Error::InvalidConfig(format!("cannot serialize output: {e}")))?;
    s.push('\n');
    write_atomic(path, s.as_bytes())
}
