//! Frame-level correspondence between two decoded timecode streams.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::timebase::Timecode;

/// Per-pair comparison of frames whose anchors lie within half a frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameSyncReport {
    pub compared: usize,
    pub mismatches: usize,
    /// Index into the first stream of the first mismatching frame.
    pub first_mismatch: Option<usize>,
    /// Signed frame difference `b - a` for each compared pair, wrapped to the
    /// nearest half day.
    pub frame_deltas: Vec<i64>,
    /// Mean of `anchor_a - anchor_b` over compared pairs, in samples.
    pub mean_anchor_offset: f64,
}

impl FrameSyncReport {
    pub fn synchronized(&self) -> bool {
        self.compared > 0 && self.mismatches == 0
    }
}

fn frame_period(stream: &[(Timecode, u64)]) -> Option<f64> {
    let mut diffs: Vec<u64> = stream.windows(2).map(|w| w[1].1.saturating_sub(w[0].1)).collect();
    if diffs.is_empty() {
        return None;
    }
    diffs.sort_unstable();
    Some(diffs[diffs.len() / 2] as f64)
}

pub fn frame_level_sync_check(
    a: &[(Timecode, u64)],
    b: &[(Timecode, u64)],
) -> Result<FrameSyncReport> {
    if let (Some(x), Some(y)) = (a.first(), b.first()) {
        if x.0.rate() != y.0.rate() {
            return Err(Error::InvalidParameter(format!(
                "streams decoded at different rates ({} vs {})",
                x.0.rate(),
                y.0.rate()
            )));
        }
    }
    let period = frame_period(a).or_else(|| frame_period(b)).unwrap_or(f64::INFINITY);
    let half = period / 2.0;

    let mut report = FrameSyncReport {
        compared: 0,
        mismatches: 0,
        first_mismatch: None,
        frame_deltas: Vec::new(),
        mean_anchor_offset: 0.0,
    };
    let mut offset_sum = 0.0;
    let mut j = 0;
    for (i, &(tc_a, anchor_a)) in a.iter().enumerate() {
        while j + 1 < b.len()
            && (b[j + 1].1 as f64 - anchor_a as f64).abs() <= (b[j].1 as f64 - anchor_a as f64).abs()
        {
            j += 1;
        }
        let Some(&(tc_b, anchor_b)) = b.get(j) else { break };
        let diff = anchor_a as f64 - anchor_b as f64;
        if diff.abs() >= half {
            continue;
        }
        report.compared += 1;
        offset_sum += diff;
        let day = tc_a.rate().frames_per_day() as i64;
        let mut delta = tc_b.frame_index() as i64 - tc_a.frame_index() as i64;
        if delta > day / 2 {
            delta -= day;
        } else if delta < -day / 2 {
            delta += day;
        }
        report.frame_deltas.push(delta);
        if delta != 0 {
            report.mismatches += 1;
            report.first_mismatch.get_or_insert(i);
        }
    }
    if report.compared == 0 {
        return Err(Error::NoOverlap);
    }
    report.mean_anchor_offset = offset_sum / report.compared as f64;
    Ok(report)
}
