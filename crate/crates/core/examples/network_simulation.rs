//! Simulates 9.5 hours of the default capture network over several seeds and
//! prints per-run wearable and crossmodal offset statistics.
//!
//! cargo run --release --example network_simulation [runs]

use multisync::sim::{measure_sim_latency, run_simulation, LatencyDistribution, TopologyConfig};
use multisync::Result;

pub fn run(seeds: std::ops::Range<u64>, duration_secs: f64) -> Result<Vec<LatencyDistribution>> {
    seeds
        .map(|seed| {
            let cfg = TopologyConfig { seed, duration_secs, ..TopologyConfig::default() };
            measure_sim_latency(&run_simulation(&cfg)?)
        })
        .collect()
}

#[allow(dead_code)]
fn main() -> Result<()> {
    let runs: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(5);
    println!("seed  wearable mean|off|  crossmodal max  camera-master  40ms");
    for (seed, lat) in run(0..runs, 9.5 * 3600.0)?.iter().enumerate() {
        println!(
            "{seed:>4}  {:>13.3} ms  {:>11.3} ms  {:>10.3e} s  {}",
            lat.wearable.mean_abs * 1e3,
            lat.crossmodal.max_abs * 1e3,
            lat.camera_master_deviation,
            if lat.verdicts.within_behavioral_window { "PASS" } else { "FAIL" },
        );
    }
    Ok(())
}
