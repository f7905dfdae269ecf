//! Encode a minute of 30 fps timecode at 48 kHz, add noise, decode it back.

use multisync::ltc::{extract_timecodes, modulate, samples_per_bit, LtcFrame};
use multisync::{FrameRate, Result, Timecode};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct Summary {
    pub frames_sent: usize,
    pub frames_decoded: usize,
    pub failures: usize,
    pub discontinuities: usize,
}

pub fn run(seconds: usize) -> Result<Summary> {
    let rate = FrameRate::Fps30;
    let spb = samples_per_bit(48_000, 30)?;
    let mut tc = Timecode::parse("09:59:30:00", rate)?;
    let frames: Vec<LtcFrame> = (0..seconds * 30)
        .map(|_| {
            let f = LtcFrame::new(tc);
            tc = tc.increment();
            f
        })
        .collect();

    let mut sig = modulate(&frames, spb, 0.5)?;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for s in sig.samples_mut() {
        *s += rng.gen_range(-0.05..0.05);
    }

    let out = extract_timecodes(&sig, spb, rate)?;
    Ok(Summary {
        frames_sent: frames.len(),
        frames_decoded: out.frames.len(),
        failures: out.failures.len(),
        discontinuities: out.discontinuities(),
    })
}

#[allow(dead_code)]
fn main() -> Result<()> {
    let s = run(60)?;
    println!(
        "sent {} frames, decoded {}, {} failures, {} discontinuities",
        s.frames_sent, s.frames_decoded, s.failures, s.discontinuities
    );
    Ok(())
}
