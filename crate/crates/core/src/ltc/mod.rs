//! SMPTE linear timecode: frame packing, biphase-mark audio and decoding.

mod bmc;
mod extract;
mod frame;

pub use bmc::{
    demodulate, modulate, modulate_bits, modulate_bits_with_periods, samples_per_bit, BitStream,
    DemodBit, Demodulator, Modulator, DEFAULT_SEARCH_HALFWIDTH,
};
pub use extract::{
    extract_timecodes, extract_timecodes_with, DecodedFrame, Extraction, FrameExtractor,
    FrameFailure,
};
pub use frame::{decode_frame, encode_frame, find_frame_boundaries, LtcFrame, FRAME_BITS, SYNC_WORD};
