//! Latency tolerances for behaviour research.
//!
//! Annotation of social behaviour is commonly done in windows between 40 ms
//! and 1 s, and audio-visual skew becomes perceptible beyond about ±80 ms.

use serde::{Deserialize, Serialize};

/// Finest common annotation window (e.g. facial action analysis).
pub const BEHAVIORAL_WINDOW_SECS: f64 = 0.040;
/// Audio-visual skew limit of human perception.
pub const PERCEPTION_SKEW_SECS: f64 = 0.080;
/// Coarsest common annotation window.
pub const UPPER_WINDOW_SECS: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToleranceVerdicts {
    pub within_behavioral_window: bool,
    pub within_perception_skew: bool,
    pub within_upper_window: bool,
}

impl ToleranceVerdicts {
    /// Verdicts for an offset magnitude in seconds; the limits are inclusive.
    pub fn evaluate(offset_secs: f64) -> Self {
        let m = offset_secs.abs();
        ToleranceVerdicts {
            within_behavioral_window: m <= BEHAVIORAL_WINDOW_SECS,
            within_perception_skew: m <= PERCEPTION_SKEW_SECS,
            within_upper_window: m <= UPPER_WINDOW_SECS,
        }
    }

    pub fn all_pass(&self) -> bool {
        self.within_behavioral_window && self.within_perception_skew && self.within_upper_window
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn limits_are_inclusive_and_symmetric() {
        assert!(ToleranceVerdicts::evaluate(0.04).within_behavioral_window);
        assert!(!ToleranceVerdicts::evaluate(-0.0401).within_behavioral_window);
        let v = ToleranceVerdicts::evaluate(0.5);
        assert!(!v.within_perception_skew && v.within_upper_window && !v.all_pass());
        assert!(ToleranceVerdicts::evaluate(0.0).all_pass());
    }
}
