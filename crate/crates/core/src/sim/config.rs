//! Simulation topology and error-model configuration (TOML).

use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution as _, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Scalar error distribution; units depend on the field it configures.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Distribution {
    Fixed { value: f64 },
    Uniform { min: f64, max: f64 },
    /// Normal draw clamped to `mean ± clamp`.
    ClampedNormal { mean: f64, std: f64, clamp: f64 },
}

impl Distribution {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Distribution::Fixed { value } => value,
            Distribution::Uniform { min, max } if min == max => min,
            Distribution::Uniform { min, max } => rng.gen_range(min..max),
            Distribution::ClampedNormal { mean, std, .. } if std == 0.0 => mean,
            Distribution::ClampedNormal { mean, std, clamp } => {
                let x = Normal::new(mean, std).expect("validated std").sample(rng);
                x.clamp(mean - clamp, mean + clamp)
            }
        }
    }

    /// Largest magnitude any draw can take.
    pub fn bound(&self) -> f64 {
        match *self {
            Distribution::Fixed { value } => value.abs(),
            Distribution::Uniform { min, max } => min.abs().max(max.abs()),
            Distribution::ClampedNormal { mean, clamp, .. } => mean.abs() + clamp,
        }
    }

    fn validate(&self, what: &str) -> Result<()> {
        let ok = match *self {
            Distribution::Fixed { value } => value.is_finite(),
            Distribution::Uniform { min, max } => min.is_finite() && max.is_finite() && min <= max,
            Distribution::ClampedNormal { mean, std, clamp } => {
                mean.is_finite() && std.is_finite() && std >= 0.0 && clamp.is_finite() && clamp >= 0.0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("{what}: invalid distribution {self:?}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NtpConfig {
    pub interval_secs: f64,
    /// Residual offset after each correction, in milliseconds.
    pub residual_ms: Distribution,
}

impl Default for NtpConfig {
    fn default() -> Self {
        NtpConfig {
            interval_secs: 64.0,
            residual_ms: Distribution::ClampedNormal { mean: 0.0, std: 0.5, clamp: 1.0 },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HandshakeConfig {
    /// Time between handshake rounds; must lie in (0, 600].
    pub interval_secs: f64,
    /// Time each sequential handshake occupies within a round.
    pub spacing_secs: f64,
    /// Transfer delay added to the hub time, in milliseconds.
    pub jitter_ms: Distribution,
}

impl Default for HandshakeConfig {
    fn default() -> Self {
        HandshakeConfig {
            interval_secs: 60.0,
            spacing_secs: 1.0,
            jitter_ms: Distribution::Uniform { min: 0.0, max: 10.0 },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LockLoss {
    pub camera: usize,
    pub at_secs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CameraConfig {
    /// Slave rate error relative to the master while locked.
    pub lock_error_ppm: f64,
    /// Cameras that free-run from a given time on. Camera 0 is the master.
    pub lock_loss: Vec<LockLoss>,
}

impl Default for CameraConfig {
    fn default() -> Self {
        CameraConfig { lock_error_ppm: 0.0, lock_loss: Vec::new() }
    }
}

/// Fixed clock parameters for one named device, replacing its random draws.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceOverride {
    pub device: String,
    #[serde(default)]
    pub offset_ms: Option<f64>,
    #[serde(default)]
    pub drift_ppm: Option<f64>,
    /// Whether the device takes part in handshake rounds.
    #[serde(default = "yes")]
    pub handshake: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TopologyConfig {
    pub seed: u64,
    pub duration_secs: f64,
    pub wearables: usize,
    pub cameras: usize,
    pub hubs: usize,
    /// RF relays between master and slaves. Modelled as zero-latency.
    pub base_stations: usize,
    pub packet_interval_secs: f64,
    pub ntp: NtpConfig,
    pub handshake: HandshakeConfig,
    /// Rate error of every free-running clock, in ppm.
    pub drift_ppm: Distribution,
    pub camera: CameraConfig,
    pub overrides: Vec<DeviceOverride>,
}

impl Default for TopologyConfig {
    fn default() -> Self {
        TopologyConfig {
            seed: 0,
            duration_secs: 9.5 * 3600.0,
            wearables: 8,
            cameras: 4,
            hubs: 1,
            base_stations: 1,
            packet_interval_secs: 1.0,
            ntp: NtpConfig::default(),
            handshake: HandshakeConfig::default(),
            drift_ppm: Distribution::Uniform { min: -20.0, max: 20.0 },
            camera: CameraConfig::default(),
            overrides: Vec::new(),
        }
    }
}

impl TopologyConfig {
    /// Every error source degenerate at zero.
    pub fn perfect() -> Self {
        TopologyConfig {
            ntp: NtpConfig { residual_ms: Distribution::Fixed { value: 0.0 }, ..NtpConfig::default() },
            handshake: HandshakeConfig {
                jitter_ms: Distribution::Fixed { value: 0.0 },
                ..HandshakeConfig::default()
            },
            drift_ppm: Distribution::Fixed { value: 0.0 },
            ..TopologyConfig::default()
        }
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: TopologyConfig = toml::from_str(s).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn wearables_per_hub(&self) -> usize {
        if self.hubs == 0 {
            0
        } else {
            self.wearables.div_ceil(self.hubs)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        let positive = |x: f64| x.is_finite() && x > 0.0;
        if !positive(self.duration_secs) {
            return bad(format!("duration_secs must be positive, got {}", self.duration_secs));
        }
        if !positive(self.packet_interval_secs) {
            return bad(format!("packet_interval_secs must be positive, got {}", self.packet_interval_secs));
        }
        if !positive(self.ntp.interval_secs) {
            return bad(format!("ntp.interval_secs must be positive, got {}", self.ntp.interval_secs));
        }
        let hs = &self.handshake;
        if !(positive(hs.interval_secs) && hs.interval_secs <= 600.0) {
            return bad(format!("handshake.interval_secs must be in (0, 600], got {}", hs.interval_secs));
        }
        if !(hs.spacing_secs.is_finite() && hs.spacing_secs >= 0.0) {
            return bad(format!("handshake.spacing_secs must be non-negative, got {}", hs.spacing_secs));
        }
        if self.wearables > 0 && self.hubs == 0 {
            return bad("wearables need at least one hub".into());
        }
        let per_hub = self.wearables_per_hub();
        if per_hub > 0 && (per_hub - 1) as f64 * hs.spacing_secs >= hs.interval_secs {
            return bad(format!(
                "{per_hub} sequential handshakes {}s apart do not fit in a {}s round",
                hs.spacing_secs, hs.interval_secs
            ));
        }
        self.ntp.residual_ms.validate("ntp.residual_ms")?;
        hs.jitter_ms.validate("handshake.jitter_ms")?;
        self.drift_ppm.validate("drift_ppm")?;
        if !self.camera.lock_error_ppm.is_finite() {
            return bad("camera.lock_error_ppm must be finite".into());
        }
        for l in &self.camera.lock_loss {
            if l.camera >= self.cameras {
                return bad(format!("lock_loss camera {} out of range", l.camera));
            }
            if !(l.at_secs.is_finite() && l.at_secs >= 0.0) {
                return bad(format!("lock_loss at_secs must be non-negative, got {}", l.at_secs));
            }
        }
        for o in &self.overrides {
            let known = match o.device.split_once('-') {
                Some(("wearable", i)) => i.parse::<usize>().is_ok_and(|i| i < self.wearables),
                Some(("hub", i)) => i.parse::<usize>().is_ok_and(|i| i < self.hubs),
                _ => o.device == "converter",
            };
            if !known {
                return bad(format!("override for unknown device `{}`", o.device));
            }
            if o.offset_ms.is_some_and(|v| !v.is_finite()) || o.drift_ppm.is_some_and(|v| !v.is_finite()) {
                return bad(format!("override for `{}` is not finite", o.device));
            }
        }
        Ok(())
    }
}
