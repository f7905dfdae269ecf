//! Biphase mark coding of bit streams as audio.
//!
//! Every bit period opens with a level transition; a 1 adds a second
//! transition half way through. The demodulator recovers the bit clock from
//! the signal itself: after each anchor (a located bit boundary) it looks for
//! the steepest edge within `±search_halfwidth` samples of the nominal period
//! and adopts it as the next anchor, so slow drift and per-bit jitter in the
//! transmitter's period never accumulate.

use serde::{Deserialize, Serialize};

use crate::audio::AudioSignal;
use crate::error::{Error, Result};

use super::frame::LtcFrame;

/// Default search half-width around the expected boundary (a six-sample window).
pub const DEFAULT_SEARCH_HALFWIDTH: usize = 3;

/// Fraction of the running peak-to-peak estimate a half-period level change
/// must exceed to count as a mid-bit transition.
const MID_BIT_FRACTION: f32 = 0.5;
/// Same for a bit boundary. Lower than the mid-bit fraction so the final edge
/// into silence (half a full swing) still closes the last bit.
const BOUNDARY_FRACTION: f32 = 0.35;
/// Smallest sample-to-sample step that can start carrier acquisition.
const ACQUIRE_FLOOR: f32 = 0.02;

/// Writes biphase-mark levels, remembering the line level between calls.
#[derive(Debug, Clone)]
pub struct Modulator {
    amplitude: f32,
    level: f32,
}

impl Modulator {
    pub fn new(amplitude: f32) -> Self {
        // The first bit's opening transition lands on +amplitude.
        Modulator { amplitude, level: -amplitude }
    }

    /// Appends one bit spanning `period` samples.
    pub fn push_bit(&mut self, bit: bool, period: usize, out: &mut Vec<f32>) {
        let half = period / 2;
        self.level = -self.level;
        out.extend(std::iter::repeat(self.level).take(half));
        if bit {
            self.level = -self.level;
        }
        out.extend(std::iter::repeat(self.level).take(period - half));
    }

    pub fn push_frame(&mut self, frame: &LtcFrame, samples_per_bit: usize, out: &mut Vec<f32>) {
        for bit in frame.to_bits() {
            self.push_bit(bit, samples_per_bit, out);
        }
    }

    pub fn amplitude(&self) -> f32 {
        self.amplitude
    }
}

/// Samples per LTC bit for a sample rate and frame rate; must divide evenly.
pub fn samples_per_bit(sample_rate: u32, fps: u32) -> Result<usize> {
    let per_second = fps * super::frame::FRAME_BITS as u32;
    if sample_rate == 0 || sample_rate % per_second != 0 {
        return Err(Error::NonIntegralBitPeriod { sample_rate, fps });
    }
    Ok((sample_rate / per_second) as usize)
}

/// Modulates consecutive frames. The sample rate is implied by the frames'
/// rate: `samples_per_bit * 80 * fps`.
pub fn modulate(frames: &[LtcFrame], samples_per_bit: usize, amplitude: f32) -> Result<AudioSignal> {
    if samples_per_bit < 4 {
        return Err(Error::SamplesPerBitTooSmall(samples_per_bit));
    }
    let fps = frames.first().map_or(30, |f| f.timecode.rate().fps());
    let sample_rate = (samples_per_bit * super::frame::FRAME_BITS) as u32 * fps;
    let mut out = Vec::with_capacity(frames.len() * samples_per_bit * super::frame::FRAME_BITS);
    let mut m = Modulator::new(amplitude);
    for f in frames {
        m.push_frame(f, samples_per_bit, &mut out);
    }
    AudioSignal::new(sample_rate, out)
}

/// Modulates a raw bit sequence with a fixed period.
pub fn modulate_bits(
    bits: &[bool],
    samples_per_bit: usize,
    amplitude: f32,
    sample_rate: u32,
) -> Result<AudioSignal> {
    if samples_per_bit < 4 {
        return Err(Error::SamplesPerBitTooSmall(samples_per_bit));
    }
    modulate_bits_with_periods(bits, std::iter::repeat(samples_per_bit), amplitude, sample_rate)
}

/// Modulates a raw bit sequence, taking each bit's period from `periods`.
pub fn modulate_bits_with_periods(
    bits: &[bool],
    periods: impl IntoIterator<Item = usize>,
    amplitude: f32,
    sample_rate: u32,
) -> Result<AudioSignal> {
    let mut m = Modulator::new(amplitude);
    let mut out = Vec::new();
    for (&bit, period) in bits.iter().zip(periods) {
        if period < 4 {
            return Err(Error::SamplesPerBitTooSmall(period));
        }
        m.push_bit(bit, period, &mut out);
    }
    AudioSignal::new(sample_rate, out)
}

/// One recovered bit and the sample index where its period starts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DemodBit {
    pub value: bool,
    pub start: u64,
}

/// Demodulated bits with the sample index of each bit's opening edge.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BitStream {
    pub bits: Vec<bool>,
    pub starts: Vec<u64>,
}

impl BitStream {
    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    fn push(&mut self, b: DemodBit) {
        self.bits.push(b.value);
        self.starts.push(b.start);
    }
}

#[derive(Debug, Clone, Copy)]
enum State {
    Acquire { from: u64 },
    Track { anchor: u64, swing: f32 },
    Done,
}

/// Streaming biphase-mark demodulator.
///
/// Feed samples with [`Demodulator::push`]; bits come out as soon as the
/// following boundary has been located. Call [`Demodulator::finish`] at end of
/// stream to flush the last bit.
#[derive(Debug, Clone)]
pub struct Demodulator {
    spb: usize,
    halfwidth: usize,
    level_window: usize,
    buf: Vec<f32>,
    base: u64,
    prev: f32,
    state: State,
}

impl Demodulator {
    pub fn new(samples_per_bit: usize, search_halfwidth: usize) -> Result<Self> {
        if samples_per_bit < 4 {
            return Err(Error::SamplesPerBitTooSmall(samples_per_bit));
        }
        if search_halfwidth >= samples_per_bit / 4 {
            return Err(Error::InvalidParameter(format!(
                "search half-width {search_halfwidth} must be below a quarter bit ({samples_per_bit} samples per bit)"
            )));
        }
        Ok(Demodulator {
            spb: samples_per_bit,
            halfwidth: search_halfwidth,
            level_window: (samples_per_bit / 8).max(1),
            buf: Vec::new(),
            base: 0,
            prev: 0.0,
            state: State::Acquire { from: 0 },
        })
    }

    /// Total samples consumed so far.
    pub fn position(&self) -> u64 {
        self.base + self.buf.len() as u64
    }

    pub fn push(&mut self, samples: &[f32], out: &mut impl Extend<DemodBit>) {
        self.buf.extend_from_slice(samples);
        self.run(false, out);
        self.compact();
    }

    pub fn finish(mut self, out: &mut impl Extend<DemodBit>) {
        self.run(true, out);
    }

    fn end(&self) -> u64 {
        self.base + self.buf.len() as u64
    }

    fn x(&self, i: u64) -> f32 {
        if i < self.base {
            self.prev
        } else {
            self.buf[(i - self.base) as usize]
        }
    }

    fn step(&self, i: u64) -> f32 {
        let before = if i == 0 { 0.0 } else { self.x(i - 1) };
        self.x(i) - before
    }

    fn mean(&self, from: u64, to: u64) -> Option<f32> {
        let to = to.min(self.end());
        if from >= to {
            return None;
        }
        let sum: f32 = (from..to).map(|i| self.x(i)).sum();
        Some(sum / (to - from) as f32)
    }

    /// Level change across a candidate edge at `w` (first sample of the new level).
    fn edge_strength(&self, w: u64) -> f32 {
        let q = self.level_window as u64;
        let before = self.mean(w.saturating_sub(q).max(self.base), w);
        let after = self.mean(w, w + q);
        match (before, after) {
            (Some(b), Some(a)) => (a - b).abs(),
            _ => 0.0,
        }
    }

    /// Steepest sample step in `[lo, hi]`, earliest on ties.
    fn steepest(&self, lo: u64, hi: u64) -> Option<u64> {
        let hi = hi.min(self.end().saturating_sub(1));
        let mut best: Option<(u64, f32)> = None;
        for i in lo.max(self.base).max(1)..=hi {
            let d = self.step(i).abs();
            if best.is_none_or(|(_, bd)| d > bd) {
                best = Some((i, d));
            }
        }
        best.map(|(i, _)| i)
    }

    fn classify(&self, start: u64, end: u64, swing: f32) -> bool {
        let len = end - start;
        let first = self.mean(start + len / 8, start + 3 * len / 8);
        let second = self.mean(start + 5 * len / 8, start + 7 * len / 8);
        match (first, second) {
            (Some(a), Some(b)) => (a - b).abs() > MID_BIT_FRACTION * swing,
            _ => false,
        }
    }

    fn peak_to_peak(&self, from: u64, to: u64) -> f32 {
        let to = to.min(self.end());
        let (mut lo, mut hi) = (f32::INFINITY, f32::NEG_INFINITY);
        for i in from..to {
            let v = self.x(i);
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if hi >= lo {
            hi - lo
        } else {
            0.0
        }
    }

    fn run(&mut self, eof: bool, out: &mut impl Extend<DemodBit>) {
        let spb = self.spb as u64;
        let h = self.halfwidth as u64;
        let q = self.level_window as u64;
        loop {
            match self.state {
                State::Done => return,
                State::Acquire { from } => {
                    let lookahead = 2 * spb;
                    let mut i = from.max(self.base);
                    let mut found = None;
                    while i < self.end() {
                        if !eof && i + lookahead > self.end() {
                            break;
                        }
                        let d = self.step(i).abs();
                        if d >= ACQUIRE_FLOOR {
                            let p2p = self.peak_to_peak(i, i + lookahead);
                            if d >= 0.25 * p2p {
                                found = Some((i, p2p));
                                break;
                            }
                        }
                        i += 1;
                    }
                    match found {
                        Some((anchor, swing)) => self.state = State::Track { anchor, swing },
                        None if eof => {
                            self.state = State::Done;
                            return;
                        }
                        None => {
                            self.state = State::Acquire { from: i };
                            return;
                        }
                    }
                }
                State::Track { anchor, swing } => {
                    let expected = anchor + spb;
                    if !eof && expected + h + q + 1 > self.end() {
                        return;
                    }
                    let threshold = BOUNDARY_FRACTION * swing;
                    let boundary = self
                        .steepest(expected - h, expected + h)
                        .map(|w| (w, self.edge_strength(w)))
                        .filter(|&(_, s)| s >= threshold);
                    if let Some((w, strength)) = boundary {
                        out.extend([DemodBit { value: self.classify(anchor, w, swing), start: anchor }]);
                        let swing = swing + (strength - swing) / 8.0;
                        self.state = State::Track { anchor: w, swing };
                        continue;
                    }
                    let remaining = self.end().saturating_sub(anchor);
                    if eof && remaining + h >= spb && remaining <= spb + h {
                        // The stream ends on a bit boundary.
                        let end = self.end();
                        out.extend([DemodBit { value: self.classify(anchor, end, swing), start: anchor }]);
                        self.state = State::Done;
                        return;
                    }
                    // No edge where a boundary must be: the anchor was a
                    // mid-bit transition. Re-lock half a period later.
                    let mid = anchor + spb / 2;
                    let relock = self
                        .steepest(mid - h, mid + h)
                        .filter(|&w| self.edge_strength(w) >= threshold);
                    self.state = match relock {
                        Some(w) => State::Track { anchor: w, swing },
                        None => State::Acquire { from: anchor + 1 },
                    };
                }
            }
        }
    }

    fn compact(&mut self) {
        let keep_from = match self.state {
            State::Acquire { from } => from.saturating_sub(1),
            State::Track { anchor, .. } => anchor.saturating_sub(1),
            State::Done => self.end().saturating_sub(1),
        };
        if keep_from <= self.base || self.buf.len() < 1 << 16 {
            return;
        }
        let drop = (keep_from - self.base) as usize;
        self.prev = self.buf[drop - 1];
        self.buf.drain(..drop);
        self.base = keep_from;
    }
}

/// Demodulates a whole signal.
pub fn demodulate(
    signal: &AudioSignal,
    nominal_samples_per_bit: usize,
    search_halfwidth: usize,
) -> Result<BitStream> {
    let mut demod = Demodulator::new(nominal_samples_per_bit, search_halfwidth)?;
    let mut bits = Vec::new();
    demod.push(signal.samples(), &mut bits);
    demod.finish(&mut bits);
    if bits.is_empty() {
        return Err(Error::NoCarrierDetected);
    }
    let mut stream = BitStream::default();
    for b in bits {
        stream.push(b);
    }
    Ok(stream)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn transitions(samples: &[f32]) -> Vec<usize> {
        (1..samples.len()).filter(|&i| samples[i] != samples[i - 1]).collect()
    }

    #[test]
    fn zero_bit_has_only_the_opening_transition() {
        let sig = modulate_bits(&[false, false], 80, 0.5, 192_000).unwrap();
        // Opening edge of bit 0 is implicit at sample 0; bit 1 opens at 80.
        assert_eq!(transitions(sig.samples()), vec![80]);
        assert_eq!(sig.samples()[0], 0.5);
    }

    #[test]
    fn one_bit_adds_a_mid_period_transition() {
        let sig = modulate_bits(&[true, true], 80, 0.5, 192_000).unwrap();
        assert_eq!(transitions(sig.samples()), vec![40, 80, 120]);
    }

    #[test]
    fn frame_at_192k_30fps_is_6400_samples() {
        use crate::timebase::{FrameRate, Timecode};
        let spb = samples_per_bit(192_000, 30).unwrap();
        assert_eq!(spb, 80);
        let f = LtcFrame::new(Timecode::zero(FrameRate::Fps30));
        let sig = modulate(&[f], spb, 0.5).unwrap();
        assert_eq!(sig.len(), 6400);
        assert_eq!(sig.sample_rate(), 192_000);
        assert_eq!(samples_per_bit(48_000, 25).unwrap(), 24);
        assert!(samples_per_bit(44_100, 30).is_err());
    }

    #[test]
    fn tiny_periods_rejected() {
        assert!(modulate_bits(&[true], 3, 0.5, 1000).is_err());
        assert!(Demodulator::new(3, 0).is_err());
        assert!(Demodulator::new(80, 20).is_err());
    }

    #[test]
    fn silence_has_no_carrier() {
        let sig = AudioSignal::silence(192_000, 10_000).unwrap();
        assert!(matches!(demodulate(&sig, 80, 3), Err(Error::NoCarrierDetected)));
    }

    #[test]
    fn anchors_sit_on_the_ideal_grid_for_clean_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let bits: Vec<bool> = (0..2000).map(|_| rng.gen()).collect();
        let sig = modulate_bits(&bits, 80, 0.5, 192_000).unwrap();
        let out = demodulate(&sig, 80, 3).unwrap();
        assert_eq!(out.bits, bits);
        for (k, &s) in out.starts.iter().enumerate() {
            assert!((s as i64 - 80 * k as i64).abs() <= 3);
        }
    }

    #[test]
    fn both_polarities_decode() {
        let bits = [true, false, false, true, true, false, true];
        let sig = modulate_bits(&bits, 20, 0.5, 48_000).unwrap();
        let inverted: Vec<f32> = sig.samples().iter().map(|s| -s).collect();
        let inv = AudioSignal::new(48_000, inverted).unwrap();
        assert_eq!(demodulate(&inv, 20, 3).unwrap().bits, bits);
    }

    #[test]
    fn relocks_when_started_mid_bit() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let bits: Vec<bool> = (0..400).map(|_| rng.gen()).collect();
        let sig = modulate_bits(&bits, 80, 0.5, 192_000).unwrap();
        // Cut 37 samples into bit 10.
        let cut = AudioSignal::new(192_000, sig.samples()[837..].to_vec()).unwrap();
        let out = demodulate(&cut, 80, 3).unwrap();
        // Once locked, the tail must match the original bits exactly.
        let tail = &out.bits[out.len() - 300..];
        assert_eq!(tail, &bits[100..]);
        assert_eq!(*out.starts.last().unwrap(), 399 * 80 - 837);
    }

    #[test]
    fn streaming_matches_one_shot() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let bits: Vec<bool> = (0..5000).map(|_| rng.gen()).collect();
        let sig = modulate_bits(&bits, 80, 0.5, 192_000).unwrap();
        let whole = demodulate(&sig, 80, 3).unwrap();

        let mut demod = Demodulator::new(80, 3).unwrap();
        let mut streamed = Vec::new();
        for chunk in sig.samples().chunks(777) {
            demod.push(chunk, &mut streamed);
        }
        demod.finish(&mut streamed);
        let streamed_bits: Vec<bool> = streamed.iter().map(|b| b.value).collect();
        assert_eq!(streamed_bits, whole.bits);
    }

    proptest! {
        #[test]
        fn demodulate_inverts_modulate(bits in prop::collection::vec(any::<bool>(), 1..400), spb in 16usize..120) {
            let sig = modulate_bits(&bits, spb, 0.7, 48_000).unwrap();
            let out = demodulate(&sig, spb, 3).unwrap();
            prop_assert_eq!(out.bits, bits);
        }

        #[test]
        fn jittered_periods_recovered(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let bits: Vec<bool> = (0..800).map(|_| rng.gen()).collect();
            let periods: Vec<usize> = (0..800).map(|_| rng.gen_range(77..=83)).collect();
            let sig = modulate_bits_with_periods(&bits, periods.iter().copied(), 0.5, 192_000).unwrap();
            let out = demodulate(&sig, 80, 3).unwrap();
            prop_assert_eq!(out.bits, bits);
            let mut start = 0u64;
            for (k, &p) in periods.iter().enumerate() {
                prop_assert_eq!(out.starts[k], start);
                start += p as u64;
            }
        }
    }
}
