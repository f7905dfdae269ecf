//! Locating and decoding LTC frames in a demodulated bit stream.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::audio::AudioSignal;
use crate::error::{Error, Result};
use crate::timebase::{FrameRate, Timecode};

use super::bmc::{DemodBit, Demodulator, DEFAULT_SEARCH_HALFWIDTH};
use super::frame::{decode_frame, LtcFrame, FRAME_BITS, SYNC_WORD};

/// A decoded frame and the sample index of its first bit's opening edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecodedFrame {
    pub anchor_sample: u64,
    pub frame: LtcFrame,
}

impl DecodedFrame {
    pub fn timecode(&self) -> Timecode {
        self.frame.timecode
    }
}

/// A sync word whose preceding 64 bits failed to decode.
#[derive(Debug)]
pub struct FrameFailure {
    pub anchor_sample: u64,
    pub error: Error,
}

#[derive(Debug, Default)]
pub struct Extraction {
    pub frames: Vec<DecodedFrame>,
    pub failures: Vec<FrameFailure>,
    /// Sync words seen before a full frame of bits had arrived.
    pub partial: usize,
}

impl Extraction {
    pub fn timecodes(&self) -> Vec<(Timecode, u64)> {
        self.frames.iter().map(|f| (f.timecode(), f.anchor_sample)).collect()
    }

    /// Number of adjacent decoded pairs that do not advance by exactly one frame.
    pub fn discontinuities(&self) -> usize {
        self.frames
            .windows(2)
            .filter(|w| w[0].timecode().increment() != w[1].timecode())
            .count()
    }
}

/// Streaming frame extractor fed with demodulated bits.
#[derive(Debug)]
pub struct FrameExtractor {
    rate: FrameRate,
    window: VecDeque<DemodBit>,
    result: Extraction,
}

impl FrameExtractor {
    pub fn new(rate: FrameRate) -> Self {
        FrameExtractor {
            rate,
            window: VecDeque::with_capacity(FRAME_BITS),
            result: Extraction::default(),
        }
    }

    pub fn push(&mut self, bit: DemodBit) {
        if self.window.len() == FRAME_BITS {
            self.window.pop_front();
        }
        self.window.push_back(bit);
        if !self.ends_with_sync() {
            return;
        }
        if self.window.len() < FRAME_BITS {
            self.result.partial += 1;
            self.window.clear();
            return;
        }
        let bits: Vec<bool> = self.window.iter().map(|b| b.value).collect();
        let anchor_sample = self.window[0].start;
        match decode_frame(&bits, self.rate) {
            Ok(frame) => self.result.frames.push(DecodedFrame { anchor_sample, frame }),
            Err(error) => self.result.failures.push(FrameFailure { anchor_sample, error }),
        }
        self.window.clear();
    }

    fn ends_with_sync(&self) -> bool {
        let n = self.window.len();
        n >= SYNC_WORD.len()
            && self
                .window
                .range(n - SYNC_WORD.len()..)
                .zip(SYNC_WORD.iter())
                .all(|(b, &s)| b.value == s)
    }

    pub fn frames(&self) -> &[DecodedFrame] {
        &self.result.frames
    }

    pub fn finish(self) -> Extraction {
        self.result
    }
}

impl Extend<DemodBit> for FrameExtractor {
    fn extend<I: IntoIterator<Item = DemodBit>>(&mut self, iter: I) {
        for b in iter {
            self.push(b);
        }
    }
}

/// Demodulates and decodes every complete frame in `signal`.
pub fn extract_timecodes(
    signal: &AudioSignal,
    nominal_samples_per_bit: usize,
    rate: FrameRate,
) -> Result<Extraction> {
    extract_timecodes_with(signal, nominal_samples_per_bit, DEFAULT_SEARCH_HALFWIDTH, rate)
}

pub fn extract_timecodes_with(
    signal: &AudioSignal,
    nominal_samples_per_bit: usize,
    search_halfwidth: usize,
    rate: FrameRate,
) -> Result<Extraction> {
    let mut demod = Demodulator::new(nominal_samples_per_bit, search_halfwidth)?;
    let mut extractor = CountingExtractor { inner: FrameExtractor::new(rate), bits: 0 };
    demod.push(signal.samples(), &mut extractor);
    demod.finish(&mut extractor);
    if extractor.bits == 0 {
        return Err(Error::NoCarrierDetected);
    }
    Ok(extractor.inner.finish())
}

struct CountingExtractor {
    inner: FrameExtractor,
    bits: usize,
}

impl Extend<DemodBit> for CountingExtractor {
    fn extend<I: IntoIterator<Item = DemodBit>>(&mut self, iter: I) {
        for b in iter {
            self.bits += 1;
            self.inner.push(b);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ltc::bmc::modulate;

    fn frames_from(start: &str, n: usize, rate: FrameRate) -> Vec<LtcFrame> {
        let mut t = Timecode::parse(start, rate).unwrap();
        (0..n)
            .map(|_| {
                let f = LtcFrame::new(t);
                t = t.increment();
                f
            })
            .collect()
    }

    #[test]
    fn decodes_every_frame_with_anchors() {
        let frames = frames_from("09:59:59:20", 60, FrameRate::Fps30);
        let sig = modulate(&frames, 20, 0.5).unwrap();
        let out = extract_timecodes(&sig, 20, FrameRate::Fps30).unwrap();
        assert_eq!(out.frames.len(), 60);
        assert!(out.failures.is_empty());
        assert_eq!(out.discontinuities(), 0);
        for (k, f) in out.frames.iter().enumerate() {
            assert_eq!(f.timecode(), frames[k].timecode);
            assert_eq!(f.anchor_sample, (k * 80 * 20) as u64);
        }
    }

    #[test]
    fn mid_frame_start_skips_the_partial_frame() {
        let frames = frames_from("00:00:10:00", 40, FrameRate::Fps25);
        let sig = modulate(&frames, 24, 0.5).unwrap();
        let cut = AudioSignal::new(sig.sample_rate(), sig.samples()[24 * 80 / 2 + 7..].to_vec()).unwrap();
        let out = extract_timecodes(&cut, 24, FrameRate::Fps25).unwrap();
        assert_eq!(out.frames.len(), 39);
        assert_eq!(out.frames[0].timecode(), frames[1].timecode);
        assert_eq!(out.discontinuities(), 0);
    }

    #[test]
    fn corrupted_frame_is_reported_not_fatal() {
        let frames = frames_from("00:00:00:00", 5, FrameRate::Fps30);
        let mut bits: Vec<bool> = frames.iter().flat_map(|f| f.to_bits()).collect();
        // Seconds-units nibble of frame 2 becomes 0xF.
        for b in &mut bits[160 + 16..160 + 20] {
            *b = true;
        }
        let sig = crate::ltc::bmc::modulate_bits(&bits, 20, 0.5, 48_000).unwrap();
        let out = extract_timecodes(&sig, 20, FrameRate::Fps30).unwrap();
        assert_eq!(out.frames.len(), 4);
        assert_eq!(out.failures.len(), 1);
        assert_eq!(out.failures[0].anchor_sample, 2 * 80 * 20);
    }

    #[test]
    fn silence_is_an_error() {
        let sig = AudioSignal::silence(48_000, 48_000).unwrap();
        assert!(matches!(
            extract_timecodes(&sig, 20, FrameRate::Fps30),
            Err(Error::NoCarrierDetected)
        ));
    }
}
