//! Offset distributions and tolerance verdicts from a simulated trace.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analysis::tolerance::ToleranceVerdicts;
use crate::error::{Error, Result};

use super::engine::{DeviceKind, SimTrace};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OffsetSummary {
    pub count: usize,
    pub mean: f64,
    pub std: f64,
    pub median: f64,
    pub mean_abs: f64,
    pub max_abs: f64,
}

impl OffsetSummary {
    pub fn from_samples(samples: &[f64]) -> Self {
        let n = samples.len();
        if n == 0 {
            return OffsetSummary { count: 0, mean: 0.0, std: 0.0, median: 0.0, mean_abs: 0.0, max_abs: 0.0 };
        }
        let nf = n as f64;
        let mean = samples.iter().sum::<f64>() / nf;
        let std = (samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / nf).sqrt();
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        let median = if n % 2 == 1 { sorted[n / 2] } else { (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0 };
        OffsetSummary {
            count: n,
            mean,
            std,
            median,
            mean_abs: samples.iter().map(|x| x.abs()).sum::<f64>() / nf,
            max_abs: samples.iter().fold(0.0, |m, x| m.max(x.abs())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceLatency {
    pub device: String,
    pub kind: DeviceKind,
    pub summary: OffsetSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencyDistribution {
    pub per_device: Vec<DeviceLatency>,
    pub wearable: OffsetSummary,
    pub camera: OffsetSummary,
    /// Wearable offset minus the nearest-in-time camera offset.
    pub crossmodal: OffsetSummary,
    /// Largest |camera offset - master offset| over simultaneous packets.
    pub camera_master_deviation: f64,
    /// Verdicts on the largest crossmodal offset.
    pub verdicts: ToleranceVerdicts,
    #[serde(skip)]
    pub device_samples: Vec<Vec<f64>>,
    #[serde(skip)]
    pub crossmodal_samples: Vec<f64>,
}

impl LatencyDistribution {
    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut s = serde_json::to_string_pretty(self).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        s.push('\n');
        std::fs::write(path, s)?;
        Ok(())
    }
}

pub fn measure_sim_latency(trace: &SimTrace) -> Result<LatencyDistribution> {
    if trace.records.is_empty() {
        return Err(Error::EmptyTrace);
    }
    let mut device_samples = vec![Vec::new(); trace.devices.len()];
    let mut camera_times = Vec::new();
    let mut camera_offsets = Vec::new();
    for r in &trace.records {
        device_samples[r.device].push(r.offset());
        if trace.devices[r.device].kind == DeviceKind::Camera {
            camera_times.push(r.true_time);
            camera_offsets.push(r.offset());
        }
    }

    let mut crossmodal_samples = Vec::new();
    if !camera_times.is_empty() {
        for r in trace.records.iter().filter(|r| trace.devices[r.device].kind == DeviceKind::Wearable) {
            let i = camera_times.partition_point(|&t| t < r.true_time);
            let j = if i == camera_times.len() {
                i - 1
            } else if i > 0 && r.true_time - camera_times[i - 1] <= camera_times[i] - r.true_time {
                // Equal distance: keep the earlier packet.
                let prev = camera_times[i - 1];
                camera_times.partition_point(|&t| t < prev)
            } else {
                i
            };
            crossmodal_samples.push(r.offset() - camera_offsets[j]);
        }
    }

    let mut camera_master_deviation: f64 = 0.0;
    let cams: Vec<usize> = trace.devices_of(DeviceKind::Camera).collect();
    if let Some(&master) = cams.first() {
        let master_at: std::collections::HashMap<u64, f64> = trace
            .records
            .iter()
            .filter(|r| r.device == master)
            .map(|r| (r.true_time.to_bits(), r.offset()))
            .collect();
        for r in trace.records.iter().filter(|r| cams[1..].contains(&r.device)) {
            if let Some(m) = master_at.get(&r.true_time.to_bits()) {
                camera_master_deviation = camera_master_deviation.max((r.offset() - m).abs());
            }
        }
    }

    let pooled = |kind: DeviceKind| -> Vec<f64> {
        trace.devices_of(kind).flat_map(|d| device_samples[d].iter().copied()).collect()
    };
    let crossmodal = OffsetSummary::from_samples(&crossmodal_samples);
    Ok(LatencyDistribution {
        per_device: trace
            .devices
            .iter()
            .zip(&device_samples)
            .filter(|(_, s)| !s.is_empty())
            .map(|(d, s)| DeviceLatency { device: d.name.clone(), kind: d.kind, summary: OffsetSummary::from_samples(s) })
            .collect(),
        wearable: OffsetSummary::from_samples(&pooled(DeviceKind::Wearable)),
        camera: OffsetSummary::from_samples(&pooled(DeviceKind::Camera)),
        crossmodal,
        camera_master_deviation,
        verdicts: ToleranceVerdicts::evaluate(crossmodal.max_abs),
        device_samples,
        crossmodal_samples,
    })
}
