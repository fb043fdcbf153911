//! CSV row schemas.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Header of every metrics and benchmark CSV.
pub const METRICS_HEADER: &str =
    "image_id,psf_id,noise_percent,method,mssim,psnr,iterations,wall_time_s";

/// Header of the sweep CSV.
pub const SWEEP_HEADER: &str = "nu1,nu2,mssim,psnr,iterations,status";

/// Unknown iteration counts and timings are written as empty fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub image_id: String,
    pub psf_id: String,
    pub noise_percent: f64,
    pub method: String,
    pub mssim: f64,
    pub psnr: f64,
    pub iterations: Option<usize>,
    pub wall_time_s: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub nu1: f64,
    pub nu2: f64,
    pub mssim: f64,
    pub psnr: f64,
    pub iterations: usize,
    /// `ok`, `diverged`, or the reason the cell failed.
    pub status: String,
}

pub fn to_csv<T: Serialize>(rows: &[T], header: &str) -> CliResult<String> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    for row in rows {
        w.serialize(row)?;
    }
    let body = w
        .into_inner()
        .map_err(|e| CliError::invalid("output-not-writable", e.to_string()))?;
    Ok(format!("{header}\n{}", String::from_utf8_lossy(&body)))
}

/// Writes rows under the header matching their type.
pub fn write_csv<T: CsvRow>(path: &Path, rows: &[T]) -> CliResult<()> {
    let text = to_csv(rows, T::HEADER)?;
    std::fs::write(path, text).map_err(|e| {
        CliError::invalid("output-not-writable", format!("{}: {e}", path.display()))
    })
}

pub fn read_csv<T: CsvRow + for<'de> Deserialize<'de>>(path: &Path) -> CliResult<Vec<T>> {
    let mut r = csv::Reader::from_path(path)?;
    let header = r.headers()?.iter().collect::<Vec<_>>().join(",");
    if header != T::HEADER {
        return Err(CliError::invalid(
            "invalid-format",
            format!("{}: unexpected header {header:?}", path.display()),
        ));
    }
    Ok(r.deserialize().collect::<Result<Vec<T>, _>>()?)
}

pub trait CsvRow: Serialize {
    const HEADER: &'static str;
}

impl CsvRow for MetricsRow {
    const HEADER: &'static str = METRICS_HEADER;
}

impl CsvRow for SweepRow {
    const HEADER: &'static str = SWEEP_HEADER;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_matches_field_order() {
        let row = MetricsRow {
            image_id: "a".into(),
            psf_id: "#1".into(),
            noise_percent: 2.0,
            method: "CNCHTV".into(),
            mssim: 0.5,
            psnr: 30.0,
            iterations: None,
            wall_time_s: Some(1.5),
        };
        let mut w = csv::Writer::from_writer(Vec::new());
        w.serialize(&row).unwrap();
        let text = String::from_utf8(w.into_inner().unwrap()).unwrap();
        assert_eq!(text.lines().next().unwrap(), METRICS_HEADER);
        assert_eq!(text.lines().nth(1).unwrap(), "a,#1,2.0,CNCHTV,0.5,30.0,,1.5");
    }

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let rows = vec![SweepRow {
            nu1: 0.1,
            nu2: 1.0,
            mssim: 0.9,
            psnr: f64::INFINITY,
            iterations: 4,
            status: "ok".into(),
        }];
        let path = dir.path().join("s.csv");
        write_csv(&path, &rows).unwrap();
        assert_eq!(read_csv::<SweepRow>(&path).unwrap(), rows);
    }
}
