//! UNIX time to wall clock to frame-indexed timecode, and sample positions to
//! the video frame that contains them.

use multisync::timebase::{sample_to_timecode, unix_to_wallclock, wallclock_to_timecode};
use multisync::{FrameRate, Result, UnixInstant, WallClock};

pub fn run() -> Result<Vec<String>> {
    let mut lines = Vec::new();
    let instant = UnixInstant::from_nanos(1_700_000_000_123_456_789);
    let wall = unix_to_wallclock(instant);
    lines.push(format!("unix {} ns -> {wall}", instant.nanos()));
    for rate in [FrameRate::Fps24, FrameRate::Fps25, FrameRate::Fps30] {
        lines.push(format!("  @{rate} -> {}", wallclock_to_timecode(wall, rate)));
    }

    let start: WallClock = "10:00:00.000".parse()?;
    for idx in [0u64, 1600, 1601, 48_000] {
        let tc = sample_to_timecode(idx, 48_000, start, FrameRate::Fps30)?;
        lines.push(format!("sample {idx:>6} @48 kHz -> {tc}"));
    }
    Ok(lines)
}

#[allow(dead_code)]
fn main() -> Result<()> {
    for l in run()? {
        println!("{l}");
    }
    Ok(())
}
