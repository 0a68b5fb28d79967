//! Baseline and latency-aware operators on the same seeds, per scenario
//! and latency.
//!
//! `cargo run --release --example paired_batch -- [trials]`

use latency_risk::scenario::{run_paired, ScenarioConfig, ScenarioKind};

fn main() -> latency_risk::Result<()> {
    let trials = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(100);
    for kind in ScenarioKind::ALL {
        for ms in [200u32, 300, 400] {
            let mut config = ScenarioConfig::for_kind(kind).with_latency(f64::from(ms) / 1000.0);
            config.trials = trials;
            let started = std::time::Instant::now();
            let r = run_paired(&config)?;
            println!(
                "{kind:<10} {ms} ms  baseline {:>7}  latency-aware {:>7}  reduction {:<10} queries {}/{}  ({:.1}s)",
                r.baseline.collision_count,
                r.latency_aware.collision_count,
                r.reduction.to_string(),
                r.baseline.queries,
                r.latency_aware.queries,
                started.elapsed().as_secs_f64()
            );
        }
    }
    Ok(())
}
