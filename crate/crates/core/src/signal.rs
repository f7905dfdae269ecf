//! Stimulus schedules, beep tracks and amplitude-threshold event detection.
//!
//! A schedule is a short run of audio-visual stimuli separated by random
//! gaps. The same schedule is rendered as a beep track at whatever rate each
//! recorder uses, and [`detect_event_boundaries`] recovers the start and end
//! sample of every beep from a recording.

use std::collections::VecDeque;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::audio::AudioSignal;
use crate::error::{Error, Result};

/// Mean of the Poisson draw for inter-event gaps, in seconds.
pub const GAP_MEAN_SECS: f64 = 3.0;
pub const MIN_GAP_SECS: f64 = 1.0;
pub const MAX_GAP_SECS: f64 = 5.0;
/// Silence before the first event of a rendered track.
pub const LEAD_IN_SECS: f64 = 1.0;
/// Silence after the last event of a rendered track.
pub const TAIL_SECS: f64 = 1.0;

pub const DEFAULT_THRESHOLD: f32 = 0.1;
pub const DEFAULT_MIN_GAP_SECS: f64 = 0.5;
/// Width of the moving-maximum envelope used to bridge zero crossings.
pub const SMOOTHING_SECS: f64 = 0.005;

/// Tone burst played for each event.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Beep {
    pub frequency_hz: f64,
    pub duration_secs: f64,
    pub amplitude: f32,
    /// Linear fade at each end, inside `duration_secs`.
    pub fade_secs: f64,
}

impl Default for Beep {
    fn default() -> Self {
        Beep { frequency_hz: 1000.0, duration_secs: 0.2, amplitude: 0.8, fade_secs: 0.005 }
    }
}

/// Event onsets in seconds from the start of the schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventSchedule {
    pub event_onsets: Vec<f64>,
    pub beep_duration: f64,
    pub seed: u64,
}

impl EventSchedule {
    pub fn from_onsets(event_onsets: Vec<f64>, beep_duration: f64) -> Result<Self> {
        if event_onsets.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter("event onsets must be strictly increasing".into()));
        }
        Ok(EventSchedule { event_onsets, beep_duration, seed: 0 })
    }

    pub fn gaps(&self) -> Vec<f64> {
        self.event_onsets.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Silence between the end of each beep and the start of the next.
    pub fn ground_truth_durations(&self) -> Vec<f64> {
        self.gaps().into_iter().map(|g| g - self.beep_duration).collect()
    }

    pub fn len(&self) -> usize {
        self.event_onsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.event_onsets.is_empty()
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["onset_seconds"])?;
        for t in &self.event_onsets {
            w.write_record([format!("{t}")])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv(path: impl AsRef<Path>, beep_duration: f64) -> Result<Self> {
        #[derive(Deserialize)]
        struct Row {
            onset_seconds: f64,
        }
        let mut r = csv::Reader::from_path(path)?;
        let onsets = r
            .deserialize::<Row>()
            .map(|row| row.map(|r| r.onset_seconds))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Self::from_onsets(onsets, beep_duration)
    }
}

/// Draws one gap: Poisson with mean [`GAP_MEAN_SECS`], redrawn until it
/// lands in `[MIN_GAP_SECS, MAX_GAP_SECS]`.
fn draw_gap(rng: &mut ChaCha8Rng, poisson: &Poisson<f64>) -> f64 {
    loop {
        let g = poisson.sample(rng);
        if (MIN_GAP_SECS..=MAX_GAP_SECS).contains(&g) {
            return g;
        }
    }
}

/// Random schedule of `n_events` stimuli, deterministic in `seed`.
pub fn generate_schedule(n_events: usize, seed: u64) -> Result<EventSchedule> {
    if n_events < 2 {
        return Err(Error::TooFewEvents { needed: 2, got: n_events });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let poisson = Poisson::new(GAP_MEAN_SECS).expect("positive mean");
    let mut onsets = Vec::with_capacity(n_events);
    let mut t = LEAD_IN_SECS;
    onsets.push(t);
    for _ in 1..n_events {
        t += draw_gap(&mut rng, &poisson);
        onsets.push(t);
    }
    Ok(EventSchedule { event_onsets: onsets, beep_duration: Beep::default().duration_secs, seed })
}

/// Raw gap draws, exposed for distribution checks.
pub fn sample_gaps(count: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let poisson = Poisson::new(GAP_MEAN_SECS).expect("positive mean");
    (0..count).map(|_| draw_gap(&mut rng, &poisson)).collect()
}

pub fn render_beep_track(schedule: &EventSchedule, sample_rate: u32) -> Result<AudioSignal> {
    let beep = Beep { duration_secs: schedule.beep_duration, ..Beep::default() };
    render_beep_track_with(schedule, sample_rate, &beep)
}

/// Renders each onset as a faded sine burst over silence.
///
/// Burst samples are taken at half-sample phase so the first and last sample
/// of every burst are nonzero.
pub fn render_beep_track_with(
    schedule: &EventSchedule,
    sample_rate: u32,
    beep: &Beep,
) -> Result<AudioSignal> {
    let sr = f64::from(sample_rate);
    if sample_rate == 0 || sr <= 2.0 * beep.frequency_hz {
        return Err(Error::InvalidParameter(format!(
            "sample rate {sample_rate} Hz must exceed twice the {} Hz beep",
            beep.frequency_hz
        )));
    }
    let end = schedule.event_onsets.last().map_or(0.0, |t| t + beep.duration_secs);
    let total = ((end + TAIL_SECS) * sr).round() as usize;
    let mut samples = vec![0.0f32; total];

    let burst_len = (beep.duration_secs * sr).round() as usize;
    let fade_len = ((beep.fade_secs * sr).round() as usize).max(1);
    for &onset in &schedule.event_onsets {
        let start = (onset * sr).round() as usize;
        for k in 0..burst_len.min(total.saturating_sub(start)) {
            let ramp_in = (k + 1) as f64 / fade_len as f64;
            let ramp_out = (burst_len - k) as f64 / fade_len as f64;
            let env = ramp_in.min(ramp_out).min(1.0);
            let phase = 2.0 * std::f64::consts::PI * beep.frequency_hz * (k as f64 + 0.5) / sr;
            samples[start + k] += (f64::from(beep.amplitude) * env * phase.sin()) as f32;
        }
    }
    AudioSignal::new(sample_rate, samples)
}

/// Detected `(onset_sample, offset_sample)` pairs; both ends inclusive.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventBoundaries {
    pub pairs: Vec<(u64, u64)>,
    pub sample_rate: u32,
}

impl EventBoundaries {
    pub fn new(pairs: Vec<(u64, u64)>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::InvalidSampleRate(sample_rate));
        }
        if pairs.iter().any(|(on, off)| off <= on) || pairs.windows(2).any(|w| w[1].0 <= w[0].1) {
            return Err(Error::InvalidParameter("event boundaries must be ordered and disjoint".into()));
        }
        Ok(EventBoundaries { pairs, sample_rate })
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn onset_seconds(&self) -> Vec<f64> {
        self.pairs.iter().map(|&(on, _)| on as f64 / f64::from(self.sample_rate)).collect()
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["onset_sample", "offset_sample"])?;
        for (on, off) in &self.pairs {
            w.write_record([on.to_string(), off.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv(path: impl AsRef<Path>, sample_rate: u32) -> Result<Self> {
        let mut r = csv::Reader::from_path(path)?;
        let pairs = r
            .deserialize::<(u64, u64)>()
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Self::new(pairs, sample_rate)
    }
}

/// Centered moving maximum of `|x|` over `width` samples.
fn envelope(x: &[f32], width: usize) -> Vec<f32> {
    let half = width / 2;
    let mut out = Vec::with_capacity(x.len());
    let mut window: VecDeque<usize> = VecDeque::new();
    let mut next = 0;
    for i in 0..x.len() {
        let hi = (i + half).min(x.len() - 1);
        while next <= hi {
            while window.back().is_some_and(|&j| x[j].abs() <= x[next].abs()) {
                window.pop_back();
            }
            window.push_back(next);
            next += 1;
        }
        while window.front().is_some_and(|&j| j + half < i) {
            window.pop_front();
        }
        out.push(x[window[0]].abs());
    }
    out
}

/// Finds one `(onset, offset)` pair per burst.
///
/// A burst is a stretch where the smoothed envelope reaches `threshold`,
/// bounded by quiet runs of at least `min_gap_secs`. Each edge is then
/// walked outwards from the threshold crossing to the first (last) sample that
/// rises above the background level measured in the adjacent quiet run, so
/// fades and attack ramps below the threshold still count as part of the
/// event.
pub fn detect_event_boundaries(
    signal: &AudioSignal,
    threshold: f32,
    min_gap_secs: f64,
) -> Result<EventBoundaries> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::InvalidParameter(format!("threshold {threshold} must be in (0, 1)")));
    }
    if !(min_gap_secs > 0.0) {
        return Err(Error::InvalidParameter(format!("min gap {min_gap_secs} must be positive")));
    }
    let x = signal.samples();
    if x.is_empty() {
        return Err(Error::NoEventsFound);
    }
    let sr = f64::from(signal.sample_rate());
    let smooth = ((SMOOTHING_SECS * sr).round() as usize).max(1);
    let min_gap = ((min_gap_secs * sr).round() as usize).max(1);
    let env = envelope(x, smooth);

    // Coarse groups of above-threshold envelope, merged across short quiet runs.
    let mut groups: Vec<(usize, usize)> = Vec::new();
    let mut i = 0;
    while i < env.len() {
        if env[i] < threshold {
            i += 1;
            continue;
        }
        let start = i;
        let mut end = i;
        while i < env.len() {
            if env[i] >= threshold {
                end = i;
                i += 1;
            } else if i - end > min_gap {
                break;
            } else {
                i += 1;
            }
        }
        groups.push((start, end));
    }
    if groups.is_empty() {
        return Err(Error::NoEventsFound);
    }

    let span = 2 * smooth;
    let reference = min_gap.min(8 * smooth);
    let mut pairs = Vec::with_capacity(groups.len());
    let mut prev_end = 0usize;
    for (g, &(start, end)) in groups.iter().enumerate() {
        let first = (start..=end).find(|&k| x[k].abs() >= threshold).unwrap_or(start);
        let last = (start..=end).rev().find(|&k| x[k].abs() >= threshold).unwrap_or(end);

        let lo = first.saturating_sub(span).max(prev_end);
        let floor_before = background(x, lo.saturating_sub(reference).max(prev_end), lo);
        let onset = (lo..=first).find(|&k| x[k].abs() > floor_before).unwrap_or(first);

        let next_start = groups.get(g + 1).map_or(x.len(), |n| n.0);
        let hi = (last + span).min(next_start.saturating_sub(1)).min(x.len() - 1);
        let floor_after = background(x, hi + 1, (hi + 1 + reference).min(next_start));
        let offset = (last..=hi).rev().find(|&k| x[k].abs() > floor_after).unwrap_or(last);

        let offset = offset.max(onset + 1).min(x.len() - 1);
        if offset > onset {
            pairs.push((onset as u64, offset as u64));
        }
        prev_end = offset + 1;
    }
    EventBoundaries::new(pairs, signal.sample_rate())
}

fn background(x: &[f32], from: usize, to: usize) -> f32 {
    x.get(from..to.min(x.len()))
        .map_or(0.0, |s| s.iter().fold(0.0f32, |m, v| m.max(v.abs())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ten_events_nine_gaps_in_range() {
        for seed in 0..50 {
            let s = generate_schedule(10, seed).unwrap();
            assert_eq!(s.len(), 10);
            let gaps = s.gaps();
            assert_eq!(gaps.len(), 9);
            assert!(gaps.iter().all(|g| (1.0..=5.0).contains(g)), "{gaps:?}");
        }
    }

    #[test]
    fn same_seed_same_schedule() {
        assert_eq!(generate_schedule(10, 42).unwrap(), generate_schedule(10, 42).unwrap());
        assert_ne!(generate_schedule(10, 42).unwrap(), generate_schedule(10, 43).unwrap());
        assert!(generate_schedule(1, 0).is_err());
    }

    #[test]
    fn gap_histogram_matches_truncated_poisson() {
        // Independent oracle: Poisson(3) pmf over {1..5}, renormalized.
        let mut pmf = [0.0f64; 6];
        let mut p = (-3.0f64).exp();
        for (k, slot) in pmf.iter_mut().enumerate() {
            if k > 0 {
                p *= 3.0 / k as f64;
            }
            *slot = p;
        }
        let mass: f64 = pmf[1..].iter().sum();
        let gaps = sample_gaps(100_000, 7);
        for k in 1..=5 {
            let observed = gaps.iter().filter(|&&g| g == k as f64).count() as f64 / gaps.len() as f64;
            let expected = pmf[k] / mass;
            assert!((observed - expected).abs() < 0.01, "k={k} {observed} vs {expected}");
        }
    }

    #[test]
    fn empty_schedule_renders_silence() {
        let s = EventSchedule::from_onsets(vec![], 0.2).unwrap();
        let sig = render_beep_track(&s, 48_000).unwrap();
        assert!(!sig.is_empty());
        assert!(sig.samples().iter().all(|&v| v == 0.0));
        assert!(matches!(
            detect_event_boundaries(&sig, 0.1, 0.5),
            Err(Error::NoEventsFound)
        ));
    }

    #[test]
    fn burst_support_is_exactly_the_beep() {
        let s = EventSchedule::from_onsets(vec![1.0], 0.2).unwrap();
        let sig = render_beep_track(&s, 48_000).unwrap();
        let nonzero: Vec<usize> =
            (0..sig.len()).filter(|&i| sig.samples()[i] != 0.0).collect();
        assert_eq!(*nonzero.first().unwrap(), 48_000);
        assert_eq!(*nonzero.last().unwrap(), 48_000 + 9600 - 1);
        assert!(*nonzero.last().unwrap() < 48_000 + 9600 + 480);
        assert!(sig.samples().iter().all(|v| v.abs() <= 0.8));
    }

    #[test]
    fn render_rejects_undersampled_rate() {
        let s = EventSchedule::from_onsets(vec![1.0], 0.2).unwrap();
        assert!(render_beep_track(&s, 2000).is_err());
    }

    #[test]
    fn detection_recovers_schedule_at_several_rates() {
        let s = generate_schedule(10, 5).unwrap();
        for rate in [8_000, 16_000, 20_000, 44_100, 48_000] {
            let sig = render_beep_track(&s, rate).unwrap();
            let b = detect_event_boundaries(&sig, DEFAULT_THRESHOLD, DEFAULT_MIN_GAP_SECS).unwrap();
            assert_eq!(b.len(), 10, "rate {rate}");
            for (det, sched) in b.onset_seconds().iter().zip(&s.event_onsets) {
                assert!((det - sched).abs() <= 1e-3, "rate {rate}: {det} vs {sched}");
            }
        }
    }

    #[test]
    fn detection_is_idempotent() {
        let s = generate_schedule(6, 1).unwrap();
        let sig = render_beep_track(&s, 20_000).unwrap();
        let a = detect_event_boundaries(&sig, 0.1, 0.5).unwrap();
        let b = detect_event_boundaries(&sig, 0.1, 0.5).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn detection_survives_background_noise() {
        use rand::Rng;
        let s = generate_schedule(10, 9).unwrap();
        let mut sig = render_beep_track(&s, 48_000).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for v in sig.samples_mut() {
            *v += rng.gen_range(-0.005f32..0.005);
        }
        let b = detect_event_boundaries(&sig, 0.1, 0.5).unwrap();
        assert_eq!(b.len(), 10);
        for (det, sched) in b.onset_seconds().iter().zip(&s.event_onsets) {
            assert!((det - sched).abs() <= 1e-3);
        }
    }

    #[test]
    fn bad_parameters_rejected() {
        let sig = AudioSignal::silence(1000, 10).unwrap();
        assert!(detect_event_boundaries(&sig, 0.0, 0.5).is_err());
        assert!(detect_event_boundaries(&sig, 1.0, 0.5).is_err());
        assert!(detect_event_boundaries(&sig, 0.1, 0.0).is_err());
        assert!(EventBoundaries::new(vec![(5, 5)], 1000).is_err());
        assert!(EventBoundaries::new(vec![(0, 10), (10, 20)], 1000).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let s = generate_schedule(10, 3).unwrap();
        s.write_csv(dir.path().join("s.csv")).unwrap();
        let back = EventSchedule::read_csv(dir.path().join("s.csv"), s.beep_duration).unwrap();
        assert_eq!(back.event_onsets, s.event_onsets);

        let b = EventBoundaries::new(vec![(0, 100), (300, 400)], 1000).unwrap();
        b.write_csv(dir.path().join("b.csv")).unwrap();
        assert_eq!(EventBoundaries::read_csv(dir.path().join("b.csv"), 1000).unwrap(), b);
    }
}
