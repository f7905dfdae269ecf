//! Discrete-event loop over NTP corrections, handshake rounds, camera lock
//! and packet emission.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;

use super::clock::ClockState;
use super::config::TopologyConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DeviceKind {
    Hub,
    Converter,
    Wearable,
    Camera,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeviceInfo {
    pub name: String,
    pub kind: DeviceKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PacketRecord {
    pub device: usize,
    pub true_time: f64,
    pub device_timestamp: f64,
}

impl PacketRecord {
    pub fn offset(&self) -> f64 {
        self.device_timestamp - self.true_time
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SyncKind {
    Init,
    Ntp,
    Handshake,
    Lock,
    LockLoss,
}

/// A clock correction and the state it left the device in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyncEvent {
    pub time: f64,
    pub device: usize,
    pub kind: SyncKind,
    pub state: ClockState,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimTrace {
    pub devices: Vec<DeviceInfo>,
    /// Packets in processing order: by true time, then device index.
    pub records: Vec<PacketRecord>,
    pub sync_log: Vec<SyncEvent>,
}

#[derive(Serialize)]
struct TraceRow<'a> {
    device_id: &'a str,
    true_time: f64,
    device_timestamp: f64,
}

impl SimTrace {
    pub fn device_index(&self, name: &str) -> Option<usize> {
        self.devices.iter().position(|d| d.name == name)
    }

    pub fn devices_of(&self, kind: DeviceKind) -> impl Iterator<Item = usize> + '_ {
        self.devices.iter().enumerate().filter(move |(_, d)| d.kind == kind).map(|(i, _)| i)
    }

    /// `(true_time, device_timestamp - true_time)` for every packet of `device`.
    pub fn offset_series(&self, device: usize) -> Vec<(f64, f64)> {
        self.records.iter().filter(|r| r.device == device).map(|r| (r.true_time, r.offset())).collect()
    }

    /// The offset series split at each correction of `device`.
    pub fn offset_segments(&self, device: usize) -> Vec<Vec<(f64, f64)>> {
        let syncs: Vec<f64> = self
            .sync_log
            .iter()
            .filter(|e| e.device == device && e.kind != SyncKind::Init)
            .map(|e| e.time)
            .collect();
        let mut segments: Vec<Vec<(f64, f64)>> = Vec::new();
        let mut current = usize::MAX;
        for p in self.offset_series(device) {
            let seg = syncs.partition_point(|&s| s <= p.0);
            if seg != current {
                segments.push(Vec::new());
                current = seg;
            }
            segments.last_mut().unwrap().push(p);
        }
        segments
    }

    /// Recomputes every packet timestamp from the sync log alone.
    pub fn replay(&self) -> Vec<f64> {
        let mut history: Vec<Vec<&SyncEvent>> = vec![Vec::new(); self.devices.len()];
        for e in &self.sync_log {
            history[e.device].push(e);
        }
        self.records
            .iter()
            .map(|r| {
                let h = &history[r.device];
                let i = h.partition_point(|e| e.time <= r.true_time);
                h[i - 1].state.local_time(r.true_time)
            })
            .collect()
    }

    /// Writes `device_id,true_time,device_timestamp`.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        for r in &self.records {
            w.serialize(TraceRow {
                device_id: &self.devices[r.device].name,
                true_time: r.true_time,
                device_timestamp: r.device_timestamp,
            })?;
        }
        w.flush()?;
        Ok(())
    }

    /// Writes `time,device_id,kind,offset,drift_ppm,last_sync`.
    pub fn write_sync_log_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["time", "device_id", "kind", "offset", "drift_ppm", "last_sync"])?;
        for e in &self.sync_log {
            let kind = match e.kind {
                SyncKind::Init => "init",
                SyncKind::Ntp => "ntp",
                SyncKind::Handshake => "handshake",
                SyncKind::Lock => "lock",
                SyncKind::LockLoss => "lock-loss",
            };
            w.write_record([
                e.time.to_string(),
                self.devices[e.device].name.clone(),
                kind.to_string(),
                e.state.offset.to_string(),
                e.state.drift_ppm.to_string(),
                e.state.last_sync.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum EventKind {
    Ntp,
    Handshake { hub: usize },
    LockLoss,
    Packet,
}

#[derive(Debug, Clone, Copy)]
struct Event {
    time: f64,
    device: usize,
    kind: EventKind,
    k: u64,
}

impl Event {
    fn key(&self) -> (f64, usize, EventKind) {
        (self.time, self.device, self.kind)
    }
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Event {}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Event {
    // Reversed so the max-heap pops the earliest event.
    fn cmp(&self, other: &Self) -> Ordering {
        let (a, b) = (self.key(), other.key());
        b.0.total_cmp(&a.0).then(b.1.cmp(&a.1)).then(b.2.cmp(&a.2)).then(other.k.cmp(&self.k))
    }
}

const STREAM_DRIFT: u64 = 0;
const STREAM_NTP: u64 = 1;
const STREAM_JITTER: u64 = 2;

/// Independent stream per (device, purpose), so changing one schedule leaves
/// the other devices' draws untouched.
fn stream(seed: u64, device: usize, purpose: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(device as u64 * 4 + purpose);
    rng
}

struct Layout {
    hubs: usize,
    converter: usize,
    wearables: usize,
    cameras: usize,
}

impl Layout {
    fn new(cfg: &TopologyConfig) -> Self {
        Layout { hubs: 0, converter: cfg.hubs, wearables: cfg.hubs + 1, cameras: cfg.hubs + 1 + cfg.wearables }
    }
}

pub fn run_simulation(cfg: &TopologyConfig) -> Result<SimTrace> {
    cfg.validate()?;
    let lay = Layout::new(cfg);
    let mut devices = Vec::new();
    for i in 0..cfg.hubs {
        devices.push(DeviceInfo { name: format!("hub-{i}"), kind: DeviceKind::Hub });
    }
    devices.push(DeviceInfo { name: "converter".into(), kind: DeviceKind::Converter });
    for i in 0..cfg.wearables {
        devices.push(DeviceInfo { name: format!("wearable-{i}"), kind: DeviceKind::Wearable });
    }
    for i in 0..cfg.cameras {
        devices.push(DeviceInfo { name: format!("camera-{i}"), kind: DeviceKind::Camera });
    }
    let n = devices.len();
    let ovr = |d: usize| cfg.overrides.iter().find(|o| o.device == devices[d].name);

    let mut ntp_rng: Vec<ChaCha8Rng> = (0..n).map(|d| stream(cfg.seed, d, STREAM_NTP)).collect();
    let mut jitter_rng: Vec<ChaCha8Rng> = (0..n).map(|d| stream(cfg.seed, d, STREAM_JITTER)).collect();
    let drifts: Vec<f64> = (0..n)
        .map(|d| {
            let drawn = cfg.drift_ppm.sample(&mut stream(cfg.seed, d, STREAM_DRIFT));
            ovr(d).and_then(|o| o.drift_ppm).unwrap_or(drawn)
        })
        .collect();

    let mut state: Vec<ClockState> = (0..n)
        .map(|d| {
            let offset = ovr(d).and_then(|o| o.offset_ms).map_or(0.0, |ms| ms * 1e-3);
            let drift = if devices[d].kind == DeviceKind::Camera { 0.0 } else { drifts[d] };
            ClockState::new(offset, drift, 0.0)
        })
        .collect();
    let mut locked = vec![true; cfg.cameras];
    let mut log: Vec<SyncEvent> = (0..n)
        .map(|d| SyncEvent { time: 0.0, device: d, kind: SyncKind::Init, state: state[d] })
        .collect();

    let mut queue = BinaryHeap::new();
    let end = cfg.duration_secs;
    let push = |q: &mut BinaryHeap<Event>, time: f64, device: usize, kind: EventKind, k: u64| {
        if time < end {
            q.push(Event { time, device, kind, k });
        }
    };

    for d in (lay.hubs..lay.hubs + cfg.hubs).chain([lay.converter]) {
        push(&mut queue, 0.0, d, EventKind::Ntp, 0);
    }
    let hs = &cfg.handshake;
    for w in 0..cfg.wearables {
        let d = lay.wearables + w;
        if ovr(d).is_some_and(|o| !o.handshake) {
            continue;
        }
        let pos = (w / cfg.hubs) as f64;
        push(&mut queue, pos * hs.spacing_secs, d, EventKind::Handshake { hub: lay.hubs + w % cfg.hubs }, 0);
    }
    for l in &cfg.camera.lock_loss {
        push(&mut queue, l.at_secs, lay.cameras + l.camera, EventKind::LockLoss, 0);
    }
    let packet_start = cfg.wearables_per_hub().saturating_sub(1) as f64 * hs.spacing_secs;
    let k0 = (packet_start / cfg.packet_interval_secs).ceil() as u64;
    for d in lay.wearables..n {
        push(&mut queue, k0 as f64 * cfg.packet_interval_secs, d, EventKind::Packet, k0);
    }

    let master = lay.cameras;
    let slave_state = |master: &ClockState, t: f64| {
        if cfg.camera.lock_error_ppm == 0.0 {
            *master
        } else {
            ClockState::new(master.offset_at(t), master.drift_ppm + cfg.camera.lock_error_ppm, t)
        }
    };

    let mut records = Vec::new();
    while let Some(ev) = queue.pop() {
        let t = ev.time;
        let d = ev.device;
        match ev.kind {
            EventKind::Ntp => {
                state[d] = match ovr(d).and_then(|o| o.offset_ms) {
                    Some(ms) => ClockState::new(ms * 1e-3, state[d].drift_ppm, t),
                    None => state[d].ntp_sync(t, &cfg.ntp.residual_ms, &mut ntp_rng[d]),
                };
                log.push(SyncEvent { time: t, device: d, kind: SyncKind::Ntp, state: state[d] });
                if d == lay.converter && cfg.cameras > 0 && locked[0] {
                    state[master] = state[d];
                    log.push(SyncEvent { time: t, device: master, kind: SyncKind::Lock, state: state[master] });
                    for c in 1..cfg.cameras {
                        if locked[c] {
                            state[master + c] = slave_state(&state[master], t);
                            log.push(SyncEvent { time: t, device: master + c, kind: SyncKind::Lock, state: state[master + c] });
                        }
                    }
                }
                push(&mut queue, (ev.k + 1) as f64 * cfg.ntp.interval_secs, d, EventKind::Ntp, ev.k + 1);
            }
            EventKind::Handshake { hub } => {
                let jitter = cfg.handshake.jitter_ms.sample(&mut jitter_rng[d]) * 1e-3;
                state[d] = state[d].handshake_sync(&state[hub], t, jitter);
                log.push(SyncEvent { time: t, device: d, kind: SyncKind::Handshake, state: state[d] });
                let pos = ((d - lay.wearables) / cfg.hubs) as f64;
                let next = (ev.k + 1) as f64 * hs.interval_secs + pos * hs.spacing_secs;
                push(&mut queue, next, d, ev.kind, ev.k + 1);
            }
            EventKind::LockLoss => {
                let c = d - lay.cameras;
                if locked[c] {
                    locked[c] = false;
                    state[d] = ClockState::new(state[d].offset_at(t), drifts[d], t);
                    log.push(SyncEvent { time: t, device: d, kind: SyncKind::LockLoss, state: state[d] });
                    if c == 0 {
                        for s in 1..cfg.cameras {
                            if locked[s] {
                                state[master + s] = slave_state(&state[master], t);
                                log.push(SyncEvent { time: t, device: master + s, kind: SyncKind::Lock, state: state[master + s] });
                            }
                        }
                    }
                }
            }
            EventKind::Packet => {
                records.push(PacketRecord { device: d, true_time: t, device_timestamp: state[d].local_time(t) });
                push(&mut queue, (ev.k + 1) as f64 * cfg.packet_interval_secs, d, EventKind::Packet, ev.k + 1);
            }
        }
    }
    Ok(SimTrace { devices, records, sync_log: log })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::sim::config::{DeviceOverride, Distribution, LockLoss};

    fn short(cfg: TopologyConfig) -> TopologyConfig {
        TopologyConfig { duration_secs: 1800.0, ..cfg }
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let cfg = short(TopologyConfig { seed: 11, ..TopologyConfig::default() });
        let a = run_simulation(&cfg).unwrap();
        let b = run_simulation(&cfg).unwrap();
        assert_eq!(a, b);
        let c = run_simulation(&TopologyConfig { seed: 12, ..cfg }).unwrap();
        assert_ne!(a.records, c.records);
    }

    #[test]
    fn perfect_network_timestamps_equal_true_time() {
        let trace = run_simulation(&short(TopologyConfig::perfect())).unwrap();
        assert!(!trace.records.is_empty());
        for r in &trace.records {
            assert_eq!(r.device_timestamp, r.true_time);
        }
    }

    #[test]
    fn records_ordered_and_strictly_increasing_per_device() {
        let trace = run_simulation(&short(TopologyConfig::default())).unwrap();
        for w in trace.records.windows(2) {
            assert!((w[0].true_time, w[0].device) < (w[1].true_time, w[1].device));
        }
    }

    #[test]
    fn replay_reproduces_every_timestamp() {
        let mut cfg = short(TopologyConfig { seed: 5, ..TopologyConfig::default() });
        cfg.camera.lock_loss.push(LockLoss { camera: 2, at_secs: 700.0 });
        cfg.camera.lock_error_ppm = 0.5;
        let trace = run_simulation(&cfg).unwrap();
        let replayed = trace.replay();
        for (r, ts) in trace.records.iter().zip(replayed) {
            assert_eq!(r.device_timestamp.to_bits(), ts.to_bits());
        }
    }

    #[test]
    fn offsets_affine_between_syncs() {
        let trace = run_simulation(&short(TopologyConfig { seed: 8, ..TopologyConfig::default() })).unwrap();
        for d in trace.devices_of(DeviceKind::Wearable) {
            for seg in trace.offset_segments(d) {
                if seg.len() < 3 {
                    continue;
                }
                let (t0, y0) = seg[0];
                let (t1, y1) = *seg.last().unwrap();
                let slope = (y1 - y0) / (t1 - t0);
                for &(t, y) in &seg {
                    assert!((y0 + slope * (t - t0) - y).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn locked_cameras_match_master_exactly() {
        let trace = run_simulation(&short(TopologyConfig { seed: 3, ..TopologyConfig::default() })).unwrap();
        let cams: Vec<usize> = trace.devices_of(DeviceKind::Camera).collect();
        let master = trace.offset_series(cams[0]);
        for &c in &cams[1..] {
            assert_eq!(trace.offset_series(c), master);
        }
    }

    #[test]
    fn drift_grows_to_12ms_before_resync() {
        let cfg = TopologyConfig {
            wearables: 1,
            duration_secs: 1300.0,
            handshake: crate::sim::config::HandshakeConfig {
                interval_secs: 600.0,
                ..TopologyConfig::perfect().handshake
            },
            overrides: vec![DeviceOverride {
                device: "wearable-0".into(),
                offset_ms: None,
                drift_ppm: Some(20.0),
                handshake: true,
            }],
            ..TopologyConfig::perfect()
        };
        let trace = run_simulation(&cfg).unwrap();
        let w = trace.device_index("wearable-0").unwrap();
        let series = trace.offset_series(w);
        let before = series.iter().find(|p| p.0 == 599.0).unwrap().1;
        assert!((before - 20e-6 * 599.0).abs() < 1e-12);
        let at = series.iter().find(|p| p.0 == 600.0).unwrap().1;
        assert!(at.abs() < 1e-12);
        // Extrapolated to the resync instant itself: 20 ppm over 600 s.
        let seg = &trace.offset_segments(w)[0];
        let slope = (seg[seg.len() - 1].1 - seg[0].1) / (seg[seg.len() - 1].0 - seg[0].0);
        assert!((slope * 600.0 - 0.012).abs() < 1e-12);
    }

    #[test]
    fn lock_loss_lets_a_camera_drift_away() {
        let mut cfg = short(TopologyConfig { seed: 4, ..TopologyConfig::default() });
        cfg.drift_ppm = Distribution::Fixed { value: 10.0 };
        cfg.camera.lock_loss.push(LockLoss { camera: 1, at_secs: 100.0 });
        let trace = run_simulation(&cfg).unwrap();
        let m = trace.offset_series(trace.device_index("camera-0").unwrap());
        let s = trace.offset_series(trace.device_index("camera-1").unwrap());
        let last = m.len() - 1;
        assert_eq!(m[0], s[0]);
        assert!((s[last].1 - m[last].1).abs() > 1e-4);
    }

    #[test]
    fn shorter_sync_interval_never_raises_mean_offset() {
        let mean_abs = |interval: f64| -> f64 {
            let mut total = 0.0;
            for seed in 0..4 {
                let cfg = TopologyConfig {
                    seed,
                    wearables: 12,
                    duration_secs: 4.0 * 3600.0,
                    handshake: crate::sim::config::HandshakeConfig {
                        interval_secs: interval,
                        ..Default::default()
                    },
                    ..TopologyConfig::default()
                };
                let trace = run_simulation(&cfg).unwrap();
                let offsets: Vec<f64> = trace
                    .records
                    .iter()
                    .filter(|r| trace.devices[r.device].kind == DeviceKind::Wearable)
                    .map(|r| r.offset().abs())
                    .collect();
                total += offsets.iter().sum::<f64>() / offsets.len() as f64;
            }
            total / 4.0
        };
        let means: Vec<f64> = [600.0, 300.0, 150.0, 60.0].into_iter().map(mean_abs).collect();
        for w in means.windows(2) {
            assert!(w[1] <= w[0], "{means:?}");
        }
    }

    #[test]
    fn invalid_config_rejected() {
        let cfg = TopologyConfig { duration_secs: -1.0, ..TopologyConfig::default() };
        assert!(matches!(run_simulation(&cfg), Err(Error::InvalidConfig(_))));
    }
}
