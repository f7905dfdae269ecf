use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported frame rate {0} fps (expected 24, 25 or 30)")]
    UnsupportedFrameRate(u32),
    #[error("invalid timecode `{0}`")]
    InvalidTimecode(String),
    #[error("invalid wall-clock time `{0}` (expected HH:MM:SS.mmm)")]
    InvalidWallClock(String),
    #[error("invalid sample rate {0}")]
    InvalidSampleRate(u32),

    #[error("frame does not end with the LTC sync word")]
    SyncWordMismatch,
    #[error("invalid BCD digit in {field} field")]
    InvalidBcdDigit { field: &'static str },
    #[error("LTC frame must be 80 bits, got {0}")]
    FrameLength(usize),
    #[error("no biphase-mark carrier detected")]
    NoCarrierDetected,
    #[error("{0} samples per bit is too few (need at least 4)")]
    SamplesPerBitTooSmall(usize),
    #[error("sample rate {sample_rate} Hz is not a whole number of samples per bit at {fps} fps")]
    NonIntegralBitPeriod { sample_rate: u32, fps: u32 },

    #[error("no events found above threshold")]
    NoEventsFound,
    #[error("need at least {needed} events, got {got}")]
    TooFewEvents { needed: usize, got: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("sample rates differ: {0} Hz vs {1} Hz")]
    SampleRateMismatch(u32, u32),
    #[error("signals too short: need at least {needed} samples, got {got}")]
    SignalTooShort { needed: usize, got: usize },
    #[error("timecode streams do not overlap")]
    NoOverlap,
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error("trace contains no packets")]
    EmptyTrace,

    #[error("WAV error: {0}")]
    Wav(#[from] hound::Error),
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
