//! Crossmodal offsets measured against known stimulus spacing.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::EventBoundaries;

use super::tolerance::ToleranceVerdicts;

/// Silence between each event's last sample and the next event's first, in seconds.
pub fn interevent_durations(b: &EventBoundaries) -> Result<Vec<f64>> {
    if b.len() < 2 {
        return Err(Error::TooFewEvents { needed: 2, got: b.len() });
    }
    let sr = f64::from(b.sample_rate);
    Ok(b.pairs.windows(2).map(|w| (w[1].0 - w[0].1) as f64 / sr).collect())
}

/// Mean and population standard deviation of absolute errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OffsetStats {
    pub count: usize,
    pub mean: f64,
    pub std: f64,
    pub max: f64,
}

impl OffsetStats {
    pub fn from_abs_errors(errors: &[f64]) -> Self {
        let n = errors.len();
        if n == 0 {
            return OffsetStats { count: 0, mean: 0.0, std: 0.0, max: 0.0 };
        }
        let mean = errors.iter().sum::<f64>() / n as f64;
        let var = errors.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / n as f64;
        OffsetStats { count: n, mean, std: var.sqrt(), max: errors.iter().copied().fold(0.0, f64::max) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventOffset {
    pub index: usize,
    pub ground_truth: f64,
    pub duration_a: f64,
    pub duration_b: f64,
    pub error_a: f64,
    pub error_b: f64,
}

/// Per-stream error against ground truth plus the combined bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentReport {
    pub stream_a: OffsetStats,
    pub stream_b: OffsetStats,
    /// Sum of the two streams' mean errors; bounds their mutual offset on average.
    pub conservative_bound: f64,
    pub verdicts: ToleranceVerdicts,
    pub per_event: Vec<EventOffset>,
}

impl AlignmentReport {
    pub fn write_event_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        for e in &self.per_event {
            w.serialize(e)?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn crossmodal_offset_report(
    durations_a: &[f64],
    durations_b: &[f64],
    ground_truth: &[f64],
) -> Result<AlignmentReport> {
    if durations_a.len() != ground_truth.len() {
        return Err(Error::LengthMismatch(durations_a.len(), ground_truth.len()));
    }
    if durations_b.len() != ground_truth.len() {
        return Err(Error::LengthMismatch(durations_b.len(), ground_truth.len()));
    }
    let per_event: Vec<EventOffset> = ground_truth
        .iter()
        .enumerate()
        .map(|(index, &gt)| EventOffset {
            index,
            ground_truth: gt,
            duration_a: durations_a[index],
            duration_b: durations_b[index],
            error_a: (durations_a[index] - gt).abs(),
            error_b: (durations_b[index] - gt).abs(),
        })
        .collect();
    let errs_a: Vec<f64> = per_event.iter().map(|e| e.error_a).collect();
    let errs_b: Vec<f64> = per_event.iter().map(|e| e.error_b).collect();
    let stream_a = OffsetStats::from_abs_errors(&errs_a);
    let stream_b = OffsetStats::from_abs_errors(&errs_b);
    let conservative_bound = stream_a.mean + stream_b.mean;
    Ok(AlignmentReport {
        stream_a,
        stream_b,
        conservative_bound,
        verdicts: ToleranceVerdicts::evaluate(conservative_bound),
        per_event,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn durations_between_boundaries() {
        let b = EventBoundaries::new(vec![(0, 100), (300, 400)], 1000).unwrap();
        assert_eq!(interevent_durations(&b).unwrap(), vec![0.2]);
        let one = EventBoundaries::new(vec![(0, 100)], 1000).unwrap();
        assert!(matches!(interevent_durations(&one), Err(Error::TooFewEvents { .. })));
    }

    #[test]
    fn perfect_streams_pass_everything() {
        let gt = [1.8, 2.8, 0.8];
        let r = crossmodal_offset_report(&gt, &gt, &gt).unwrap();
        assert_eq!(r.stream_a.mean, 0.0);
        assert_eq!(r.stream_b.std, 0.0);
        assert_eq!(r.conservative_bound, 0.0);
        assert!(r.verdicts.all_pass());
    }

    #[test]
    fn bound_is_sum_of_means() {
        let gt = [1.0, 2.0, 3.0, 4.0];
        let a: Vec<f64> = gt.iter().zip([0.005, 0.0108, 0.0166, 0.0108]).map(|(g, e)| g + e).collect();
        let b: Vec<f64> = gt.iter().zip([0.0, 0.0019, 0.0038, 0.0019]).map(|(g, e)| g - e).collect();
        let r = crossmodal_offset_report(&a, &b, &gt).unwrap();
        assert!((r.stream_a.mean - 0.0108).abs() < 1e-12);
        assert!((r.stream_b.mean - 0.0019).abs() < 1e-12);
        assert!((r.conservative_bound - 0.0127).abs() < 1e-12);
        assert!(r.verdicts.within_behavioral_window);
    }

    #[test]
    fn fifty_ms_error_fails_the_40ms_verdict() {
        let gt = [1.0, 2.0, 3.0];
        let a: Vec<f64> = gt.iter().map(|g| g + 0.05).collect();
        let r = crossmodal_offset_report(&a, &gt, &gt).unwrap();
        assert!(r.conservative_bound >= 0.05 - 1e-12);
        assert!(!r.verdicts.within_behavioral_window);
        assert!(r.verdicts.within_perception_skew);
        assert!(r.verdicts.within_upper_window);
    }

    #[test]
    fn length_mismatch_rejected() {
        assert!(matches!(
            crossmodal_offset_report(&[1.0], &[1.0, 2.0], &[1.0]),
            Err(Error::LengthMismatch(2, 1))
        ));
    }

    #[test]
    fn stats_recompute_from_raw_errors() {
        let errs = [0.001, 0.004, 0.002, 0.009];
        let s = OffsetStats::from_abs_errors(&errs);
        let mean = 0.004;
        let var = ((0.003f64).powi(2) + 0.0 + (0.002f64).powi(2) + (0.005f64).powi(2)) / 4.0;
        assert!((s.mean - mean).abs() < 1e-15);
        assert!((s.std - var.sqrt()).abs() < 1e-15);
        assert_eq!(s.max, 0.009);
    }
}
