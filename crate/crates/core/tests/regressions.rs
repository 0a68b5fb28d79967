//! Frozen outputs. These values were checked against the independent
//! oracles in the acceptance and property tests when first recorded; a
//! change here means behaviour moved and needs a second look.

mod common;

use common::isotropic_sweep;
use latency_risk::licp::SafetyConfig;
use latency_risk::scenario::{perceived_risk_trace, run_paired, trial_seed, ScenarioConfig, ScenarioKind};

#[test]
fn isotropic_sweep_unsafe_counts() {
    let lambda = SafetyConfig::default().lambda;
    let counts: Vec<usize> =
        isotropic_sweep(&[0.5, 1.0, 1.5, 2.0, 2.5]).iter().map(|g| g.unsafe_count(lambda)).collect();
    assert_eq!(counts, [193, 193, 195, 204, 207]);
}

#[test]
fn merge_trace_crossings() {
    let config = ScenarioConfig::for_kind(ScenarioKind::Merge);
    let taus = [0.1, 0.2, 0.3, 0.4];
    let trace = perceived_risk_trace(&config, trial_seed(2024, 2), &taus).unwrap();
    let round = |t: Option<f64>| t.map(|t| (t * 100.0).round() as i64);
    assert_eq!(round(trace.ground_truth_crossing()), Some(594));
    let baseline: Vec<_> = taus.iter().map(|&l| round(trace.baseline_crossing(l))).collect();
    assert_eq!(baseline, [Some(604), Some(614), Some(624), Some(634)]);
    let aware: Vec<_> = taus.iter().map(|&l| round(trace.latency_aware_crossing(l))).collect();
    // On this scene the aware series crosses no later than the ground truth.
    assert_eq!(aware, [Some(594), Some(590), Some(592), Some(587)]);
}

#[test]
fn small_paired_batches() {
    let mut got = Vec::new();
    for kind in [ScenarioKind::Merge, ScenarioKind::RightTurn, ScenarioKind::LeftTurn] {
        let mut c = ScenarioConfig::for_kind(kind).with_latency(0.3);
        c.trials = 12;
        c.master_seed = 7;
        let paired = run_paired(&c).unwrap();
        got.push((paired.baseline.collisions, paired.latency_aware.collisions, paired.baseline.queries));
    }
    // (baseline collisions, latency-aware collisions, baseline queries).
    assert_eq!(got, [(3, 1, 55), (3, 1, 44), (5, 1, 68)]);
}
