//! Constant-offset vs drift classification of an offset time series.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DesyncKind {
    Synchronized,
    ConstantOffset,
    Drifting,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesyncThresholds {
    /// Slopes above this magnitude (ppm) are drift.
    pub drift_ppm: f64,
    /// Intercepts above this magnitude (seconds) are a constant offset.
    pub offset_secs: f64,
}

impl Default for DesyncThresholds {
    fn default() -> Self {
        DesyncThresholds { drift_ppm: 1.0, offset_secs: 1e-3 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesyncDiagnosis {
    /// Fitted offset at `t = 0`, in seconds.
    pub constant_offset: f64,
    /// Fitted slope in parts per million.
    pub drift_rate: f64,
    pub classification: DesyncKind,
}

pub fn classify_desync(series: &[(f64, f64)]) -> Result<DesyncDiagnosis> {
    classify_desync_with(series, &DesyncThresholds::default())
}

/// Ordinary least squares on `(t, offset)`; fitted around the mean time for
/// conditioning, then shifted back to report the intercept at `t = 0`.
pub fn classify_desync_with(
    series: &[(f64, f64)],
    thresholds: &DesyncThresholds,
) -> Result<DesyncDiagnosis> {
    if series.len() < 2 {
        return Err(Error::TooFewEvents { needed: 2, got: series.len() });
    }
    let n = series.len() as f64;
    let t_mean = series.iter().map(|p| p.0).sum::<f64>() / n;
    let y_mean = series.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for &(t, y) in series {
        let dt = t - t_mean;
        sxx += dt * dt;
        sxy += dt * (y - y_mean);
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = y_mean - slope * t_mean;
    let drift_rate = slope * 1e6;
    let classification = if drift_rate.abs() > thresholds.drift_ppm {
        DesyncKind::Drifting
    } else if intercept.abs() > thresholds.offset_secs {
        DesyncKind::ConstantOffset
    } else {
        DesyncKind::Synchronized
    };
    Ok(DesyncDiagnosis { constant_offset: intercept, drift_rate, classification })
}

#[derive(Debug, Serialize, Deserialize)]
struct OffsetRow {
    t_seconds: f64,
    offset_seconds: f64,
}

pub fn write_offset_series(path: impl AsRef<Path>, series: &[(f64, f64)]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for &(t_seconds, offset_seconds) in series {
        w.serialize(OffsetRow { t_seconds, offset_seconds })?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_offset_series(path: impl AsRef<Path>) -> Result<Vec<(f64, f64)>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize::<OffsetRow>()
        .map(|row| row.map(|r| (r.t_seconds, r.offset_seconds)).map_err(Error::from))
        .collect()
}
