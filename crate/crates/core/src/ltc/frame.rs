//! 80-bit SMPTE 12M LTC frame layout.
//!
//! Bits are listed in transmission order; every multi-bit field is sent
//! least significant bit first.
//!
//! ```text
//!  0..4   frame units        4..8   user group 1
//!  8..10  frame tens        10      drop frame   11  color frame
//! 12..16  user group 2      16..20  second units 20..24 user group 3
//! 24..27  second tens       27      flag A
//! 28..32  user group 4      32..36  minute units 36..40 user group 5
//! 40..43  minute tens       43      flag B
//! 44..48  user group 6      48..52  hour units   52..56 user group 7
//! 56..58  hour tens         58      binary group flag 1
//! 59      flag C            60..64  user group 8
//! 64..80  sync word 0011111111111101
//! ```
//!
//! At 24 and 30 fps flag A is the polarity correction bit and flags B/C are
//! binary group flags 0/2. At 25 fps flag A is binary group flag 0, flag B is
//! binary group flag 2 and flag C carries polarity.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::timebase::{FrameRate, Timecode};

pub const FRAME_BITS: usize = 80;

/// Sync word in transmission order.
pub const SYNC_WORD: [bool; 16] = [
    false, false, true, true, true, true, true, true, true, true, true, true, true, true, false,
    true,
];

const USER_GROUP_OFFSETS: [usize; 8] = [4, 12, 20, 28, 36, 44, 52, 60];

/// One decoded or to-be-encoded LTC frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LtcFrame {
    pub timecode: Timecode,
    pub drop_frame: bool,
    pub color_frame: bool,
    /// User groups 1..=8 packed as nibbles, group 1 in the low nibble.
    pub user_bits: u32,
    /// Binary group flags 0, 1 and 2 in bits 0, 1 and 2.
    pub binary_group_flags: u8,
    /// Polarity correction bit as serialized. Recomputed on encode.
    pub polarity_correction: bool,
}

impl LtcFrame {
    pub fn new(timecode: Timecode) -> Self {
        LtcFrame {
            timecode,
            drop_frame: false,
            color_frame: false,
            user_bits: 0,
            binary_group_flags: 0,
            polarity_correction: false,
        }
    }

    pub fn with_user_bits(mut self, user_bits: u32) -> Self {
        self.user_bits = user_bits;
        self
    }

    /// Serializes to 80 bits, filling in the polarity bit so the frame
    /// carries an even number of zeros.
    pub fn to_bits(&self) -> [bool; FRAME_BITS] {
        encode_frame(self)
    }
}

struct FlagPositions {
    polarity: usize,
    bgf0: usize,
    bgf2: usize,
}

fn flag_positions(rate: FrameRate) -> FlagPositions {
    match rate {
        FrameRate::Fps25 => FlagPositions { polarity: 59, bgf0: 27, bgf2: 43 },
        FrameRate::Fps24 | FrameRate::Fps30 => FlagPositions { polarity: 27, bgf0: 43, bgf2: 59 },
    }
}

fn put(bits: &mut [bool; FRAME_BITS], offset: usize, width: usize, value: u32) {
    for i in 0..width {
        bits[offset + i] = (value >> i) & 1 == 1;
    }
}

fn get(bits: &[bool], offset: usize, width: usize) -> u32 {
    (0..width).fold(0, |acc, i| acc | (u32::from(bits[offset + i]) << i))
}

/// Packs a frame into its 80-bit wire form.
pub fn encode_frame(frame: &LtcFrame) -> [bool; FRAME_BITS] {
    let tc = &frame.timecode;
    let mut bits = [false; FRAME_BITS];
    let digits = |v: u8| (u32::from(v % 10), u32::from(v / 10));

    let (fu, ft) = digits(tc.frames());
    let (su, st) = digits(tc.seconds());
    let (mu, mt) = digits(tc.minutes());
    let (hu, ht) = digits(tc.hours());
    put(&mut bits, 0, 4, fu);
    put(&mut bits, 8, 2, ft);
    put(&mut bits, 16, 4, su);
    put(&mut bits, 24, 3, st);
    put(&mut bits, 32, 4, mu);
    put(&mut bits, 40, 3, mt);
    put(&mut bits, 48, 4, hu);
    put(&mut bits, 56, 2, ht);

    bits[10] = frame.drop_frame;
    bits[11] = frame.color_frame;
    for (group, &offset) in USER_GROUP_OFFSETS.iter().enumerate() {
        put(&mut bits, offset, 4, (frame.user_bits >> (4 * group)) & 0xF);
    }

    let flags = flag_positions(tc.rate());
    bits[flags.bgf0] = frame.binary_group_flags & 1 != 0;
    bits[58] = frame.binary_group_flags & 2 != 0;
    bits[flags.bgf2] = frame.binary_group_flags & 4 != 0;

    bits[64..].copy_from_slice(&SYNC_WORD);

    let zeros = bits.iter().filter(|b| !**b).count();
    bits[flags.polarity] = zeros % 2 == 1;
    bits
}

/// Unpacks an 80-bit window whose last 16 bits must be the sync word.
pub fn decode_frame(bits: &[bool], rate: FrameRate) -> Result<LtcFrame> {
    if bits.len() != FRAME_BITS {
        return Err(Error::FrameLength(bits.len()));
    }
    if bits[64..] != SYNC_WORD {
        return Err(Error::SyncWordMismatch);
    }

    let digit = |offset, width, field| -> Result<u8> {
        let v = get(bits, offset, width);
        if v > 9 {
            Err(Error::InvalidBcdDigit { field })
        } else {
            Ok(v as u8)
        }
    };
    let frames = digit(8, 2, "frames")? * 10 + digit(0, 4, "frames")?;
    let seconds = digit(24, 3, "seconds")? * 10 + digit(16, 4, "seconds")?;
    let minutes = digit(40, 3, "minutes")? * 10 + digit(32, 4, "minutes")?;
    let hours = digit(56, 2, "hours")? * 10 + digit(48, 4, "hours")?;
    let timecode = Timecode::new(hours, minutes, seconds, frames, rate).map_err(|_| {
        let field = if u32::from(frames) >= rate.fps() {
            "frames"
        } else if seconds > 59 {
            "seconds"
        } else if minutes > 59 {
            "minutes"
        } else {
            "hours"
        };
        Error::InvalidBcdDigit { field }
    })?;

    let user_bits = USER_GROUP_OFFSETS
        .iter()
        .enumerate()
        .fold(0u32, |acc, (group, &offset)| acc | (get(bits, offset, 4) << (4 * group)));

    let flags = flag_positions(rate);
    let binary_group_flags =
        u8::from(bits[flags.bgf0]) | (u8::from(bits[58]) << 1) | (u8::from(bits[flags.bgf2]) << 2);

    Ok(LtcFrame {
        timecode,
        drop_frame: bits[10],
        color_frame: bits[11],
        user_bits,
        binary_group_flags,
        polarity_correction: bits[flags.polarity],
    })
}

/// Bit positions just past each sync word in `bits`, i.e. the frame
/// boundaries. Matches do not overlap.
pub fn find_frame_boundaries(bits: &[bool]) -> Vec<usize> {
    let mut out = Vec::new();
    let mut i = 0;
    while i + SYNC_WORD.len() <= bits.len() {
        if bits[i..i + SYNC_WORD.len()] == SYNC_WORD {
            out.push(i + SYNC_WORD.len());
            i += SYNC_WORD.len();
        } else {
            i += 1;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tc(s: &str, rate: FrameRate) -> Timecode {
        Timecode::parse(s, rate).unwrap()
    }

    fn bitstring(bits: &[bool]) -> String {
        bits.iter().map(|b| if *b { '1' } else { '0' }).collect()
    }

    #[test]
    fn sync_word_closes_every_frame() {
        for rate in [FrameRate::Fps24, FrameRate::Fps25, FrameRate::Fps30] {
            let bits = LtcFrame::new(tc("07:08:09:10", rate)).to_bits();
            assert_eq!(bitstring(&bits[64..]), "0011111111111101");
        }
    }

    #[test]
    fn zero_timecode_has_zero_nibbles() {
        let bits = LtcFrame::new(Timecode::zero(FrameRate::Fps30)).to_bits();
        for (offset, width) in [(0, 4), (8, 2), (16, 4), (24, 3), (32, 4), (40, 3), (48, 4), (56, 2)] {
            assert_eq!(get(&bits, offset, width), 0);
        }
        // 64 zero data bits plus 3 zeros in the sync word is odd, so the
        // polarity bit is raised.
        assert!(bits[27]);
    }

    #[test]
    fn known_layout_for_12_34_56_12() {
        let bits = LtcFrame::new(tc("12:34:56:12", FrameRate::Fps30)).to_bits();
        assert_eq!(get(&bits, 0, 4), 2);
        assert_eq!(get(&bits, 8, 2), 1);
        assert_eq!(get(&bits, 16, 4), 6);
        assert_eq!(get(&bits, 24, 3), 5);
        assert_eq!(get(&bits, 32, 4), 4);
        assert_eq!(get(&bits, 40, 3), 3);
        assert_eq!(get(&bits, 48, 4), 2);
        assert_eq!(get(&bits, 56, 2), 1);
        let back = decode_frame(&bits, FrameRate::Fps30).unwrap();
        assert_eq!(back.timecode, tc("12:34:56:12", FrameRate::Fps30));
    }

    #[test]
    fn flipped_sync_bit_rejected() {
        let mut bits = LtcFrame::new(tc("01:00:00:00", FrameRate::Fps25)).to_bits();
        bits[70] = !bits[70];
        assert!(matches!(decode_frame(&bits, FrameRate::Fps25), Err(Error::SyncWordMismatch)));
        assert!(matches!(decode_frame(&bits[..79], FrameRate::Fps25), Err(Error::FrameLength(79))));
    }

    #[test]
    fn bad_bcd_rejected() {
        let mut bits = LtcFrame::new(tc("01:00:00:00", FrameRate::Fps30)).to_bits();
        put(&mut bits, 16, 4, 0xC);
        assert!(matches!(
            decode_frame(&bits, FrameRate::Fps30),
            Err(Error::InvalidBcdDigit { field: "seconds" })
        ));
        let mut bits = LtcFrame::new(tc("01:00:00:00", FrameRate::Fps30)).to_bits();
        put(&mut bits, 40, 3, 6);
        assert!(matches!(
            decode_frame(&bits, FrameRate::Fps30),
            Err(Error::InvalidBcdDigit { field: "minutes" })
        ));
        // 29 frames is fine at 30 fps but not at 25.
        let bits = LtcFrame::new(tc("01:00:00:29", FrameRate::Fps30)).to_bits();
        assert!(matches!(
            decode_frame(&bits, FrameRate::Fps25),
            Err(Error::InvalidBcdDigit { field: "frames" })
        ));
    }

    #[test]
    fn boundary_found_after_sync_word_then_next_frame_bits() {
        // A sync word followed by the first bits of the next frame, 0001000.
        let mut bits = SYNC_WORD.to_vec();
        bits.extend([false, false, false, true, false, false, false]);
        assert_eq!(find_frame_boundaries(&bits), vec![16]);
    }

    #[test]
    fn boundaries_of_consecutive_frames() {
        let mut t = tc("00:00:00:00", FrameRate::Fps30);
        let mut bits = Vec::new();
        for _ in 0..5 {
            bits.extend(LtcFrame::new(t).to_bits());
            t = t.increment();
        }
        assert_eq!(find_frame_boundaries(&bits), vec![80, 160, 240, 320, 400]);
    }

    fn any_frame() -> impl Strategy<Value = LtcFrame> {
        (
            prop_oneof![Just(FrameRate::Fps24), Just(FrameRate::Fps25), Just(FrameRate::Fps30)],
            0u64..86_400 * 30,
            any::<bool>(),
            any::<bool>(),
            any::<u32>(),
            0u8..8,
        )
            .prop_map(|(rate, idx, df, cf, ub, bgf)| LtcFrame {
                timecode: Timecode::from_frame_index(idx, rate),
                drop_frame: df,
                color_frame: cf,
                user_bits: ub,
                binary_group_flags: bgf,
                polarity_correction: false,
            })
    }

    proptest! {
        #[test]
        fn encode_decode_inverse(frame in any_frame()) {
            let bits = frame.to_bits();
            prop_assert_eq!(bits.len(), FRAME_BITS);
            prop_assert_eq!(bits.iter().filter(|b| !**b).count() % 2, 0);
            let back = decode_frame(&bits, frame.timecode.rate()).unwrap();
            prop_assert_eq!(back.timecode, frame.timecode);
            prop_assert_eq!(back.user_bits, frame.user_bits);
            prop_assert_eq!(back.drop_frame, frame.drop_frame);
            prop_assert_eq!(back.color_frame, frame.color_frame);
            prop_assert_eq!(back.binary_group_flags, frame.binary_group_flags);
            prop_assert_eq!(back.to_bits(), bits);
        }
    }
}
