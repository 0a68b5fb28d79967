//! Perceived-risk traces: how the risk an operator sees lags the true
//! risk when the scene reaches them late.
//!
//! The ego drives the reference with no decisions taken. At every step the
//! instantaneous collision probability of the tracked obstacle is the
//! ground truth. A latency-agnostic operator with latency `tau` sees the
//! ground truth from `tau` ago. A latency-aware operator sees the same old
//! belief but propagated forward by `tau` to the current time.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::config::ScenarioConfig;
use super::trial::{LoopOptions, NoOperator, Simulation};
use super::world::build_scenario;
use crate::collision::collision_prob_quadrature;
use crate::licom::{compute_licom, EgoTemplate, GridSpec, LicomConfig, RiskGrid};
use crate::prediction::ObstacleTrack;
use crate::rng::{derive_seed, tag};
use crate::{Error, Result};

/// Quadrature resolution of the trace, meters.
pub const TRACE_RESOLUTION: f64 = 0.1;

/// One perceived-risk series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerceivedSeries {
    pub latency: f64,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskTrace {
    pub seed: u64,
    pub lambda: f64,
    pub times: Vec<f64>,
    pub ground_truth: Vec<f64>,
    pub baseline: Vec<PerceivedSeries>,
    pub latency_aware: Vec<PerceivedSeries>,
}

/// First time `values` reaches `lambda`.
pub fn first_crossing(times: &[f64], values: &[f64], lambda: f64) -> Option<f64> {
    times.iter().zip(values).find(|(_, v)| **v >= lambda).map(|(t, _)| *t)
}

impl RiskTrace {
    pub fn ground_truth_crossing(&self) -> Option<f64> {
        first_crossing(&self.times, &self.ground_truth, self.lambda)
    }

    /// Crossing time of the baseline series at `latency`.
    pub fn baseline_crossing(&self, latency: f64) -> Option<f64> {
        let s = self.baseline.iter().find(|s| (s.latency - latency).abs() < 1e-9)?;
        first_crossing(&self.times, &s.values, self.lambda)
    }

    pub fn latency_aware_crossing(&self, latency: f64) -> Option<f64> {
        let s = self.latency_aware.iter().find(|s| (s.latency - latency).abs() < 1e-9)?;
        first_crossing(&self.times, &s.values, self.lambda)
    }

    /// Header `t,ground_truth,baseline_<ms>...,latency_aware_<ms>...`, one
    /// row per step.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let mut header = String::from("t,ground_truth");
        for s in &self.baseline {
            header += &format!(",baseline_{}ms", (s.latency * 1000.0).round() as u64);
        }
        for s in &self.latency_aware {
            header += &format!(",latency_aware_{}ms", (s.latency * 1000.0).round() as u64);
        }
        writeln!(out, "{header}")?;
        for (i, t) in self.times.iter().enumerate() {
            write!(out, "{t:.2},{:.6}", self.ground_truth[i])?;
            for s in self.baseline.iter().chain(&self.latency_aware) {
                write!(out, ",{:.6}", s.values[i])?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Runs the scene of `seed` without decisions and records the risk series
/// for every latency in `latencies`. Latencies are rounded to whole steps.
pub fn perceived_risk_trace(config: &ScenarioConfig, seed: u64, latencies: &[f64]) -> Result<RiskTrace> {
    config.validate()?;
    let dt = config.dt;
    let shifts = latencies
        .iter()
        .map(|&l| {
            if l >= 0.0 && l.is_finite() {
                Ok((l / dt).round() as usize)
            } else {
                Err(Error::InvalidInput(format!("latency must be >= 0, got {l}")))
            }
        })
        .collect::<Result<Vec<_>>>()?;

    let scene = build_scenario(config, seed)?;
    let options = LoopOptions { decisions: false, stop_on_collision: false, record_steps: false };
    let mut sim = Simulation::new(config.clone(), scene, 0, options);
    let mut egos = Vec::new();
    let mut tracks: Vec<Option<ObstacleTrack>> = Vec::new();
    loop {
        let ego = *sim.ego();
        let running = sim.step(&mut NoOperator)?;
        egos.push(ego);
        tracks.push(sim.track());
        if !running {
            break;
        }
    }

    let risk = |ego_idx: usize, track: &Option<ObstacleTrack>, ahead: f64| -> Result<f64> {
        let Some(track) = track else {
            return Ok(0.0);
        };
        let belief = track.belief.propagate(ahead, &track.motion)?;
        let fp = config.ego_extents.at(egos[ego_idx].pose);
        Ok(collision_prob_quadrature(&fp, &belief, &track.observed.extents, TRACE_RESOLUTION)?.value)
    };

    let n = egos.len();
    let ground_truth = (0..n).map(|i| risk(i, &tracks[i], 0.0)).collect::<Result<Vec<_>>>()?;
    let mut baseline = Vec::new();
    let mut latency_aware = Vec::new();
    for (&latency, &shift) in latencies.iter().zip(&shifts) {
        let late = (0..n).map(|i| if i >= shift { ground_truth[i - shift] } else { 0.0 }).collect();
        baseline.push(PerceivedSeries { latency, values: late });
        let ahead = shift as f64 * dt;
        let predicted = (0..n)
            .map(|i| if i >= shift { risk(i, &tracks[i - shift], ahead) } else { Ok(0.0) })
            .collect::<Result<Vec<_>>>()?;
        latency_aware.push(PerceivedSeries { latency, values: predicted });
    }
    Ok(RiskTrace {
        seed,
        lambda: config.operator.safety.lambda,
        times: egos.iter().map(|e| e.time).collect(),
        ground_truth,
        baseline,
        latency_aware,
    })
}

/// Where and how finely to sample a risk-map sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    /// Side length of the square grid, meters.
    pub extent: f64,
    pub resolution: f64,
    /// Samples per cell probe, outer by inner.
    pub outer_samples: usize,
    pub inner_samples: usize,
}

impl Default for SweepGrid {
    fn default() -> Self {
        Self { extent: 60.0, resolution: 1.0, outer_samples: 50, inner_samples: 20 }
    }
}

/// Risk maps of the scene of `seed` as seen at `time`, one per latency.
/// The grid is centered between the ego and the obstacle's predicted
/// position at the largest latency and shared by all maps. The ego
/// template takes the reference heading at `time + tau`.
pub fn risk_map_sweep(
    config: &ScenarioConfig,
    seed: u64,
    time: f64,
    taus: &[f64],
    grid: &SweepGrid,
) -> Result<Vec<RiskGrid>> {
    config.validate()?;
    let scene = build_scenario(config, seed)?;
    let options = LoopOptions { decisions: false, stop_on_collision: false, record_steps: false };
    let mut sim = Simulation::new(config.clone(), scene, 0, options);
    while sim.time() + 1e-9 < time {
        if !sim.step(&mut NoOperator)? {
            break;
        }
    }
    // One more step records the observation at `time`.
    let ego = *sim.ego();
    sim.step(&mut NoOperator)?;
    let track = sim.track();
    let far = taus.iter().cloned().fold(0.0, f64::max);
    let (cx, cy) = match &track {
        Some(t) => {
            let (vx, vy) = t.motion.velocity;
            let m = t.belief.modes[0].mean;
            (0.5 * (ego.pose.x + m.x + vx * far), 0.5 * (ego.pose.y + m.y + vy * far))
        }
        None => (ego.pose.x, ego.pose.y),
    };
    let spec = GridSpec::centered(cx, cy, grid.extent, grid.resolution)?;
    let cfg = LicomConfig { safety: config.safety.with_budget(grid.outer_samples, grid.inner_samples), pruning: true };
    taus.iter()
        .enumerate()
        .map(|(i, &tau)| {
            let heading = sim.scene.reference.pose_clamped(ego.time + tau).0.theta;
            compute_licom(
                &spec,
                &EgoTemplate { heading, extents: config.ego_extents },
                track.as_ref(),
                tau,
                ego.time,
                &cfg,
                derive_seed(seed, &[tag::OVERLAY, i as u64]),
            )
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::ScenarioKind;

    #[test]
    fn zero_latency_series_equal_ground_truth() {
        let c = ScenarioConfig::for_kind(ScenarioKind::Merge);
        let t = perceived_risk_trace(&c, 3, &[0.0]).unwrap();
        assert_eq!(t.baseline[0].values, t.ground_truth);
        assert_eq!(t.latency_aware[0].values, t.ground_truth);
        let mut csv = Vec::new();
        t.write_csv(&mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert!(text.starts_with("t,ground_truth,baseline_0ms,latency_aware_0ms\n"));
        assert_eq!(text.lines().count(), t.times.len() + 1);
    }

    #[test]
    fn negative_latency_rejected() {
        let c = ScenarioConfig::for_kind(ScenarioKind::Merge);
        assert!(perceived_risk_trace(&c, 3, &[-0.1]).is_err());
    }
}
