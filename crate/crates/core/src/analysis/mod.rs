//! Synchronization measurements: frame correspondence, sub-frame lag,
//! event-based crossmodal offsets and desync classification.

pub mod desync;
pub mod framesync;
pub mod lag;
pub mod offsets;
pub mod tolerance;

pub use desync::{
    classify_desync, classify_desync_with, read_offset_series, write_offset_series, DesyncDiagnosis,
    DesyncKind, DesyncThresholds,
};
pub use framesync::{frame_level_sync_check, FrameSyncReport};
pub use lag::{
    correlate_fft, correlation_at, crosscorr_lag, crosscorr_lag_with, summarize_lags, LagMeasurement,
    LagOptions, LagSummary, DEFAULT_MAX_LAG,
};
pub use offsets::{crossmodal_offset_report, interevent_durations, AlignmentReport, EventOffset, OffsetStats};
pub use tolerance::{ToleranceVerdicts, BEHAVIORAL_WINDOW_SECS, PERCEPTION_SKEW_SECS, UPPER_WINDOW_SECS};
