//! Ground-truth risk against what a delayed operator perceives.
//!
//! `cargo run --release --example risk_trace -- [trial_index]`

use latency_risk::scenario::{perceived_risk_trace, trial_seed, ScenarioConfig, ScenarioKind};

fn main() -> latency_risk::Result<()> {
    let index: u64 = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(2);
    let config = ScenarioConfig::for_kind(ScenarioKind::Merge);
    let latencies = [0.1, 0.2, 0.3, 0.4];
    let trace = perceived_risk_trace(&config, trial_seed(config.master_seed, index), &latencies)?;
    let show = |t: Option<f64>| t.map_or("never".to_string(), |t| format!("{t:.2} s"));
    println!("lambda {}; ground truth crosses at {}", trace.lambda, show(trace.ground_truth_crossing()));
    for tau in latencies {
        println!(
            "latency {:.0} ms: baseline crosses at {}, latency-aware at {}",
            tau * 1000.0,
            show(trace.baseline_crossing(tau)),
            show(trace.latency_aware_crossing(tau))
        );
    }
    trace.write_csv(std::io::BufWriter::new(std::fs::File::create("risk-trace.csv")?))?;
    println!("series written to risk-trace.csv");
    Ok(())
}
