//! Classify simulated wearables as synchronized, offset or drifting.

use multisync::analysis::{classify_desync, DesyncDiagnosis};
use multisync::sim::{run_simulation, DeviceOverride, TopologyConfig};
use multisync::Result;

pub fn run() -> Result<Vec<(String, DesyncDiagnosis)>> {
    let fixed = |device: &str, offset_ms: f64, drift_ppm: f64| DeviceOverride {
        device: device.into(),
        offset_ms: Some(offset_ms),
        drift_ppm: Some(drift_ppm),
        handshake: false,
    };
    let cfg = TopologyConfig {
        wearables: 3,
        duration_secs: 3600.0,
        overrides: vec![fixed("wearable-0", 0.0, 0.0), fixed("wearable-1", 25.0, 0.0), fixed("wearable-2", 0.0, 16.7)],
        ..TopologyConfig::default()
    };
    let trace = run_simulation(&cfg)?;
    (0..3)
        .map(|i| {
            let name = format!("wearable-{i}");
            let d = trace.device_index(&name).expect("configured device");
            Ok((name, classify_desync(&trace.offset_series(d))?))
        })
        .collect()
}

#[allow(dead_code)]
fn main() -> Result<()> {
    for (name, d) in run()? {
        println!(
            "{name}: {:?} (offset {:.3} ms, drift {:.3} ppm)",
            d.classification,
            d.constant_offset * 1e3,
            d.drift_rate
        );
    }
    Ok(())
}
