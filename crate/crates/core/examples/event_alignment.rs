//! Render one stimulus schedule for a 20 kHz wearable and a 48 kHz camera,
//! detect the beeps in each, and compare inter-event silences to the schedule.

use multisync::analysis::{crossmodal_offset_report, interevent_durations, AlignmentReport};
use multisync::signal::{
    detect_event_boundaries, generate_schedule, render_beep_track, DEFAULT_MIN_GAP_SECS,
    DEFAULT_THRESHOLD,
};
use multisync::Result;

pub fn run(seed: u64) -> Result<AlignmentReport> {
    let schedule = generate_schedule(10, seed)?;
    let truth = schedule.ground_truth_durations();

    let mut durations = Vec::new();
    for rate in [20_000, 48_000] {
        let track = render_beep_track(&schedule, rate)?;
        let events = detect_event_boundaries(&track, DEFAULT_THRESHOLD, DEFAULT_MIN_GAP_SECS)?;
        durations.push(interevent_durations(&events)?);
    }
    crossmodal_offset_report(&durations[0], &durations[1], &truth)
}

#[allow(dead_code)]
fn main() -> Result<()> {
    let r = run(42)?;
    println!("wearable  {:.4} ± {:.4} ms", r.stream_a.mean * 1e3, r.stream_a.std * 1e3);
    println!("camera    {:.4} ± {:.4} ms", r.stream_b.mean * 1e3, r.stream_b.std * 1e3);
    println!("bound     {:.4} ms, within 40 ms: {}", r.conservative_bound * 1e3, r.verdicts.within_behavioral_window);
    Ok(())
}
