//! One closed-loop trial per scenario and operator.
//!
//! `cargo run --release --example scenario_trial -- [trial_index] [latency_ms]`

use latency_risk::scenario::{run_trial, trial_seed, ScenarioConfig, ScenarioKind};
use latency_risk::vqa::OperatorMode;

fn main() -> latency_risk::Result<()> {
    let mut args = std::env::args().skip(1);
    let index: u64 = args.next().and_then(|a| a.parse().ok()).unwrap_or(0);
    let ms: f64 = args.next().and_then(|a| a.parse().ok()).unwrap_or(300.0);
    for kind in ScenarioKind::ALL {
        for mode in [OperatorMode::Baseline, OperatorMode::LatencyAware] {
            let config = ScenarioConfig::for_kind(kind).with_latency(ms / 1000.0).with_policy(mode);
            let r = run_trial(&config, trial_seed(config.master_seed, index))?;
            let answers: Vec<String> = r
                .decisions
                .iter()
                .map(|d| format!("{}@{:.2}s", d.option.as_deref().unwrap_or("-"), d.issued_at))
                .collect();
            println!(
                "{kind:<10} {:<13} {:?} at {:.2} s, min clearance {:.2} m, answers [{}]",
                mode.name(),
                r.outcome,
                r.end_time,
                r.min_clearance,
                answers.join(", ")
            );
        }
    }
    Ok(())
}
