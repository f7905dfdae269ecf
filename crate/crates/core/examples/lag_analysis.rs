//! Two recorders capture the same timecode, one 79 samples late. Recover the
//! lag, confirm frame-level agreement, then summarize a batch of sessions.

use multisync::analysis::{crosscorr_lag, frame_level_sync_check, summarize_lags, DEFAULT_MAX_LAG};
use multisync::ltc::{extract_timecodes, modulate, LtcFrame};
use multisync::{AudioSignal, FrameRate, Result, Timecode};

pub fn run() -> Result<(i64, bool, f64)> {
    let rate = FrameRate::Fps30;
    let frames: Vec<LtcFrame> =
        (0..30).map(|k| LtcFrame::new(Timecode::from_frame_index(36_000 + k, rate))).collect();
    let reference = modulate(&frames, 80, 0.5)?;

    let delay = 79;
    let mut late = vec![0.0f32; delay];
    late.extend_from_slice(&reference.samples()[..reference.len() - delay]);
    let late = AudioSignal::new(reference.sample_rate(), late)?;

    // The reference leads the late copy.
    let m = crosscorr_lag(&late, &reference, DEFAULT_MAX_LAG)?;
    println!("lag {} samples ({:.3} µs)", m.lag_samples, m.lag_micros());

    let ta = extract_timecodes(&late, 80, rate)?.timecodes();
    let tb = extract_timecodes(&reference, 80, rate)?.timecodes();
    let fs = frame_level_sync_check(&ta, &tb)?;
    println!("frame-level: {} compared, {} mismatches", fs.compared, fs.mismatches);

    let s = summarize_lags(&[79, 80, 80, 80, -43, 78], 192_000)?;
    println!(
        "sessions: mean {} samples = {:.2} µs, median {} samples = {:.4} µs",
        s.mean_samples, s.mean_micros, s.median_samples, s.median_micros
    );
    Ok((m.lag_samples, fs.synchronized(), s.median_samples))
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run().map(|_| ())
}
