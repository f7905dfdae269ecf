//! Device clock model: an offset plus a rate error since the last correction.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::config::Distribution;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClockState {
    /// Device clock minus true time at `last_sync`, in seconds.
    pub offset: f64,
    /// Rate error in parts per million.
    pub drift_ppm: f64,
    /// True time of the last correction, in seconds.
    pub last_sync: f64,
}

impl ClockState {
    pub fn new(offset: f64, drift_ppm: f64, last_sync: f64) -> Self {
        ClockState { offset, drift_ppm, last_sync }
    }

    pub fn perfect() -> Self {
        ClockState::new(0.0, 0.0, 0.0)
    }

    /// Device reading at true time `t`.
    pub fn local_time(&self, t: f64) -> f64 {
        t + self.offset_at(t)
    }

    /// `local_time(t) - t`.
    pub fn offset_at(&self, t: f64) -> f64 {
        self.offset + self.drift_ppm * 1e-6 * (t - self.last_sync)
    }

    /// Corrects the clock to within an NTP residual (milliseconds) drawn from `residual_ms`.
    pub fn ntp_sync<R: Rng + ?Sized>(&self, t: f64, residual_ms: &Distribution, rng: &mut R) -> Self {
        ClockState { offset: residual_ms.sample(rng) * 1e-3, drift_ppm: self.drift_ppm, last_sync: t }
    }

    /// Sets the clock to the hub's reading plus a transfer delay of `jitter` seconds.
    pub fn handshake_sync(&self, hub: &ClockState, t: f64, jitter: f64) -> Self {
        ClockState { offset: hub.local_time(t) + jitter - t, drift_ppm: self.drift_ppm, last_sync: t }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_clock() {
        let c = ClockState::perfect();
        assert_eq!(c.local_time(1234.5), 1234.5);
    }

    #[test]
    fn constant_offset() {
        let c = ClockState::new(0.005, 0.0, 0.0);
        for t in [0.0, 10.0, 9000.0] {
            assert!((c.local_time(t) - t - 0.005).abs() < 1e-12);
        }
    }

    #[test]
    fn twenty_ppm_over_600s_is_12ms() {
        let c = ClockState::new(0.0, 20.0, 100.0);
        assert!((c.offset_at(700.0) - 0.012).abs() < 1e-15);
    }

    #[test]
    fn ntp_sync_resets_offset_and_keeps_drift() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let c = ClockState::new(0.3, 7.0, 0.0);
        let s = c.ntp_sync(50.0, &Distribution::Fixed { value: 0.0 }, &mut rng);
        assert_eq!(s, ClockState::new(0.0, 7.0, 50.0));
        assert_eq!(s.local_time(50.0) - 50.0, 0.0);
    }

    #[test]
    fn default_residual_is_clamped_to_1ms() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let d = Distribution::ClampedNormal { mean: 0.0, std: 0.5, clamp: 1.0 };
        let c = ClockState::perfect();
        for _ in 0..10_000 {
            assert!(c.ntp_sync(0.0, &d, &mut rng).offset.abs() <= 1e-3);
        }
    }

    #[test]
    fn handshake_composes_hub_offset_and_jitter() {
        let sensor = ClockState::new(0.2, 3.0, 0.0);
        let perfect = sensor.handshake_sync(&ClockState::perfect(), 10.0, 0.0);
        assert_eq!(perfect.offset, 0.0);
        let hub = ClockState::new(0.001, 0.0, 0.0);
        let s = sensor.handshake_sync(&hub, 10.0, 0.004);
        assert!((s.offset - 0.005).abs() < 1e-12);
        assert_eq!(s.drift_ppm, 3.0);
        assert_eq!(s.last_sync, 10.0);
    }
}
