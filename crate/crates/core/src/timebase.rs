//! Time representations used across the toolkit.
//!
//! Three views of the same instant show up in a capture session: UNIX
//! nanoseconds (what the wearable hub hands out), UTC time-of-day with
//! millisecond resolution, and SMPTE timecode at a video frame rate. All
//! conversions here are pure integer arithmetic. Leap seconds are ignored.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const NANOS_PER_MILLI: i64 = 1_000_000;
const MILLIS_PER_DAY: i64 = 86_400_000;
const NANOS_PER_DAY: i64 = MILLIS_PER_DAY * NANOS_PER_MILLI;

/// Non-drop-frame video rates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FrameRate {
    Fps24,
    Fps25,
    Fps30,
}

impl FrameRate {
    pub fn from_fps(fps: u32) -> Result<Self> {
        match fps {
            24 => Ok(FrameRate::Fps24),
            25 => Ok(FrameRate::Fps25),
            30 => Ok(FrameRate::Fps30),
            other => Err(Error::UnsupportedFrameRate(other)),
        }
    }

    pub fn fps(self) -> u32 {
        match self {
            FrameRate::Fps24 => 24,
            FrameRate::Fps25 => 25,
            FrameRate::Fps30 => 30,
        }
    }

    /// Number of frames in a 24 hour day.
    pub fn frames_per_day(self) -> u64 {
        86_400 * u64::from(self.fps())
    }
}

impl fmt::Display for FrameRate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} fps", self.fps())
    }
}

/// Signed nanoseconds since 1970-01-01T00:00:00Z.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct UnixInstant(pub i64);

impl UnixInstant {
    pub fn from_nanos(nanos: i64) -> Self {
        UnixInstant(nanos)
    }

    pub fn nanos(self) -> i64 {
        self.0
    }
}

/// UTC time of day with millisecond resolution (`HH:MM:SS.mmm`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct WallClock {
    hours: u8,
    minutes: u8,
    seconds: u8,
    milliseconds: u16,
}

impl WallClock {
    pub fn new(hours: u8, minutes: u8, seconds: u8, milliseconds: u16) -> Result<Self> {
        if hours > 23 || minutes > 59 || seconds > 59 || milliseconds > 999 {
            return Err(Error::InvalidWallClock(format!(
                "{hours:02}:{minutes:02}:{seconds:02}.{milliseconds:03}"
            )));
        }
        Ok(WallClock { hours, minutes, seconds, milliseconds })
    }

    pub fn midnight() -> Self {
        WallClock { hours: 0, minutes: 0, seconds: 0, milliseconds: 0 }
    }

    /// Builds a wall clock from milliseconds since midnight, wrapping at 24 h.
    pub fn from_millis_of_day(ms: i64) -> Self {
        let ms = ms.rem_euclid(MILLIS_PER_DAY);
        WallClock {
            hours: (ms / 3_600_000) as u8,
            minutes: (ms / 60_000 % 60) as u8,
            seconds: (ms / 1000 % 60) as u8,
            milliseconds: (ms % 1000) as u16,
        }
    }

    pub fn hours(&self) -> u8 {
        self.hours
    }

    pub fn minutes(&self) -> u8 {
        self.minutes
    }

    pub fn seconds(&self) -> u8 {
        self.seconds
    }

    pub fn milliseconds(&self) -> u16 {
        self.milliseconds
    }

    pub fn total_millis(&self) -> i64 {
        ((i64::from(self.hours) * 60 + i64::from(self.minutes)) * 60 + i64::from(self.seconds))
            * 1000
            + i64::from(self.milliseconds)
    }
}

impl fmt::Display for WallClock {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:02}:{:02}:{:02}.{:03}",
            self.hours, self.minutes, self.seconds, self.milliseconds
        )
    }
}

impl FromStr for WallClock {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidWallClock(s.to_string());
        let (hms, ms) = s.split_once('.').ok_or_else(bad)?;
        let mut parts = hms.split(':');
        let mut field = || -> Result<u8> {
            parts.next().and_then(|p| p.parse().ok()).ok_or_else(bad)
        };
        let (h, m, sec) = (field()?, field()?, field()?);
        if parts.next().is_some() || ms.len() != 3 {
            return Err(bad());
        }
        let ms: u16 = ms.parse().map_err(|_| bad())?;
        WallClock::new(h, m, sec, ms).map_err(|_| bad())
    }
}

/// SMPTE timecode `HH:MM:SS:FF` at a non-drop frame rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Timecode {
    hours: u8,
    minutes: u8,
    seconds: u8,
    frames: u8,
    rate: FrameRate,
}

impl Timecode {
    pub fn new(hours: u8, minutes: u8, seconds: u8, frames: u8, rate: FrameRate) -> Result<Self> {
        if hours > 23 || minutes > 59 || seconds > 59 || u32::from(frames) >= rate.fps() {
            return Err(Error::InvalidTimecode(format!(
                "{hours:02}:{minutes:02}:{seconds:02}:{frames:02} @ {rate}"
            )));
        }
        Ok(Timecode { hours, minutes, seconds, frames, rate })
    }

    pub fn zero(rate: FrameRate) -> Self {
        Timecode { hours: 0, minutes: 0, seconds: 0, frames: 0, rate }
    }

    /// Timecode for a frame count since midnight, wrapping at 24 h.
    pub fn from_frame_index(index: u64, rate: FrameRate) -> Self {
        let fps = u64::from(rate.fps());
        let index = index % rate.frames_per_day();
        let secs = index / fps;
        Timecode {
            hours: (secs / 3600) as u8,
            minutes: (secs / 60 % 60) as u8,
            seconds: (secs % 60) as u8,
            frames: (index % fps) as u8,
            rate,
        }
    }

    /// Frames elapsed since midnight.
    pub fn frame_index(&self) -> u64 {
        let secs = (u64::from(self.hours) * 60 + u64::from(self.minutes)) * 60
            + u64::from(self.seconds);
        secs * u64::from(self.rate.fps()) + u64::from(self.frames)
    }

    pub fn hours(&self) -> u8 {
        self.hours
    }

    pub fn minutes(&self) -> u8 {
        self.minutes
    }

    pub fn seconds(&self) -> u8 {
        self.seconds
    }

    pub fn frames(&self) -> u8 {
        self.frames
    }

    pub fn rate(&self) -> FrameRate {
        self.rate
    }

    /// The next frame, carrying through seconds, minutes and hours and
    /// wrapping at midnight.
    pub fn increment(&self) -> Timecode {
        Timecode::from_frame_index(self.frame_index() + 1, self.rate)
    }

    /// Parses `HH:MM:SS:FF` at the given rate.
    pub fn parse(s: &str, rate: FrameRate) -> Result<Self> {
        let bad = || Error::InvalidTimecode(s.to_string());
        let fields: Vec<u8> = s
            .split(':')
            .map(|p| p.parse::<u8>().map_err(|_| bad()))
            .collect::<Result<_>>()?;
        match fields[..] {
            [h, m, sec, f] => Timecode::new(h, m, sec, f, rate),
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for Timecode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:02}:{:02}:{:02}:{:02}",
            self.hours, self.minutes, self.seconds, self.frames
        )
    }
}

/// UTC time of day for a UNIX instant, truncating to the millisecond.
pub fn unix_to_wallclock(t: UnixInstant) -> WallClock {
    let of_day = t.0.rem_euclid(NANOS_PER_DAY);
    WallClock::from_millis_of_day(of_day / NANOS_PER_MILLI)
}

/// Frame containing the wall-clock instant: `floor(ms * fps / 1000)`.
pub fn wallclock_to_timecode(w: WallClock, rate: FrameRate) -> Timecode {
    let frames = u32::from(w.milliseconds) * rate.fps() / 1000;
    Timecode {
        hours: w.hours,
        minutes: w.minutes,
        seconds: w.seconds,
        frames: frames as u8,
        rate,
    }
}

/// Timecode of the video frame containing `stream_start + sample_index / sample_rate`.
///
/// Evaluated in exact rational arithmetic, so an instant that falls exactly
/// on a frame boundary belongs to the later frame.
pub fn sample_to_timecode(
    sample_index: u64,
    sample_rate: u32,
    stream_start: WallClock,
    rate: FrameRate,
) -> Result<Timecode> {
    if sample_rate == 0 {
        return Err(Error::InvalidSampleRate(sample_rate));
    }
    // frame = floor((start_ms / 1000 + idx / sr) * fps)
    //       = floor((start_ms * sr + idx * 1000) * fps / (1000 * sr))
    let sr = u128::from(sample_rate);
    let numer = (stream_start.total_millis() as u128 * sr + u128::from(sample_index) * 1000)
        * u128::from(rate.fps());
    let frame = numer / (1000 * sr);
    let frame = (frame % u128::from(rate.frames_per_day())) as u64;
    Ok(Timecode::from_frame_index(frame, rate))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn wc(s: &str) -> WallClock {
        s.parse().unwrap()
    }

    fn tc(s: &str, fps: u32) -> Timecode {
        Timecode::parse(s, FrameRate::from_fps(fps).unwrap()).unwrap()
    }

    #[test]
    fn unix_epoch_and_end_of_day() {
        assert_eq!(unix_to_wallclock(UnixInstant(0)), wc("00:00:00.000"));
        assert_eq!(
            unix_to_wallclock(UnixInstant(86_399_999_000_000)),
            wc("23:59:59.999")
        );
    }

    #[test]
    fn unix_matches_independent_breakdown() {
        // 3661.5 s after the epoch: 1 h + 1 min + 1 s + 500 ms.
        assert_eq!(
            unix_to_wallclock(UnixInstant(3_661_500_000_000)),
            wc("01:01:01.500")
        );
        // A real date: 2019-10-21T14:03:27.123456789Z is 1571666607 s.
        let ns = 1_571_666_607_123_456_789;
        assert_eq!(unix_to_wallclock(UnixInstant(ns)), wc("14:03:27.123"));
    }

    #[test]
    fn unix_before_epoch_wraps_to_previous_day() {
        assert_eq!(unix_to_wallclock(UnixInstant(-1)), wc("23:59:59.999"));
    }

    #[test]
    fn wallclock_frame_mapping() {
        let r30 = FrameRate::Fps30;
        assert_eq!(wallclock_to_timecode(wc("01:02:03.000"), r30), tc("01:02:03:00", 30));
        assert_eq!(wallclock_to_timecode(wc("01:02:03.999"), r30), tc("01:02:03:29", 30));
        assert_eq!(
            wallclock_to_timecode(wc("10:00:00.500"), FrameRate::Fps25),
            tc("10:00:00:12", 25)
        );
    }

    #[test]
    fn increment_carries() {
        assert_eq!(tc("00:00:00:29", 30).increment(), tc("00:00:01:00", 30));
        assert_eq!(tc("23:59:59:29", 30).increment(), tc("00:00:00:00", 30));
        assert_eq!(tc("00:00:59:24", 25).increment(), tc("00:01:00:00", 25));
    }

    #[test]
    fn sample_index_to_frame() {
        let start = WallClock::midnight();
        let r = FrameRate::Fps30;
        assert_eq!(sample_to_timecode(0, 48_000, start, r).unwrap(), tc("00:00:00:00", 30));
        assert_eq!(sample_to_timecode(48_000, 48_000, start, r).unwrap(), tc("00:00:01:00", 30));
        assert_eq!(sample_to_timecode(1599, 48_000, start, r).unwrap(), tc("00:00:00:00", 30));
        // 1600 samples sit exactly on the 1/30 s boundary and open frame 1.
        assert_eq!(sample_to_timecode(1600, 48_000, start, r).unwrap(), tc("00:00:00:01", 30));
        assert_eq!(sample_to_timecode(1601, 48_000, start, r).unwrap(), tc("00:00:00:01", 30));
        assert!(sample_to_timecode(1, 0, start, r).is_err());
    }

    #[test]
    fn sample_offset_from_nonzero_start_wraps_midnight() {
        let start = wc("23:59:59.990");
        let t = sample_to_timecode(960, 48_000, start, FrameRate::Fps25).unwrap();
        // 23:59:59.990 + 20 ms = 00:00:00.010 -> frame 0
        assert_eq!(t, tc("00:00:00:00", 25));
    }

    #[test]
    fn text_forms_round_trip_and_reject_garbage() {
        assert_eq!(wc("12:34:56.789").to_string(), "12:34:56.789");
        assert_eq!(tc("12:34:56:12", 30).to_string(), "12:34:56:12");
        assert!("12:34:56".parse::<WallClock>().is_err());
        assert!("24:00:00.000".parse::<WallClock>().is_err());
        assert!("12:34:56.78".parse::<WallClock>().is_err());
        assert!(Timecode::parse("00:00:00:30", FrameRate::Fps30).is_err());
        assert!(Timecode::parse("00:00:00:25", FrameRate::Fps25).is_err());
        assert!(Timecode::parse("00:00:00", FrameRate::Fps30).is_err());
        assert!(FrameRate::from_fps(29).is_err());
    }

    fn any_rate() -> impl Strategy<Value = FrameRate> {
        prop_oneof![Just(FrameRate::Fps24), Just(FrameRate::Fps25), Just(FrameRate::Fps30)]
    }

    proptest! {
        #[test]
        fn frames_stay_in_range(ms in 0i64..MILLIS_PER_DAY, rate in any_rate()) {
            let t = wallclock_to_timecode(WallClock::from_millis_of_day(ms), rate);
            prop_assert!(u32::from(t.frames()) < rate.fps());
        }

        #[test]
        fn frame_mapping_is_monotone(a in 0i64..MILLIS_PER_DAY, b in 0i64..MILLIS_PER_DAY, rate in any_rate()) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let tl = wallclock_to_timecode(WallClock::from_millis_of_day(lo), rate);
            let th = wallclock_to_timecode(WallClock::from_millis_of_day(hi), rate);
            prop_assert!(tl.frame_index() <= th.frame_index());
        }

        #[test]
        fn fps_increments_advance_one_second(secs in 0u64..86_400, rate in any_rate()) {
            let fps = u64::from(rate.fps());
            let start = Timecode::from_frame_index(secs * fps, rate);
            let mut t = start;
            for _ in 0..fps {
                t = t.increment();
            }
            prop_assert_eq!(t.frames(), 0);
            prop_assert_eq!(t.frame_index(), ((secs + 1) % 86_400) * fps);
        }
    }
}
