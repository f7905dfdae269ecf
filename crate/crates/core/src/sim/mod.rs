//! Discrete-event simulation of an NTP-referenced capture network: hubs and
//! an LTC converter disciplined by NTP, wearables synced to their hub by
//! sequential handshakes, and cameras locked to the converter-fed master.

pub mod clock;
pub mod config;
pub mod engine;
pub mod latency;

pub use clock::ClockState;
pub use config::{CameraConfig, DeviceOverride, Distribution, HandshakeConfig, LockLoss, NtpConfig, TopologyConfig};
pub use engine::{run_simulation, DeviceInfo, DeviceKind, PacketRecord, SimTrace, SyncEvent, SyncKind};
pub use latency::{measure_sim_latency, DeviceLatency, LatencyDistribution, OffsetSummary};
