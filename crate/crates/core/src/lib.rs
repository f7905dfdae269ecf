//! Synchronization tooling for wireless multimodal capture rigs.
//!
//! The crate covers four jobs that come up when cameras are slaved to a
//! timecode master and wearables are synced from an NTP-disciplined hub:
//!
//! * [`ltc`]: SMPTE linear timecode frames, biphase-mark audio and a
//!   jitter-tolerant demodulator.
//! * [`analysis`]: sample-level lag between timecode tracks, frame-level
//!   correspondence, crossmodal offset reports and drift diagnosis.
//! * [`signal`]: stimulus schedules, beep tracks and threshold event detection.
//! * [`sim`]: a deterministic discrete-event model of the capture network.
//!
//! [`timebase`] holds the time types shared by all of them.

pub mod analysis;
pub mod audio;
pub mod error;
pub mod ltc;
pub mod signal;
pub mod sim;
pub mod timebase;

pub use audio::AudioSignal;
pub use error::{Error, Result};
pub use timebase::{FrameRate, Timecode, UnixInstant, WallClock};
