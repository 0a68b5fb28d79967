//! Batches of trials, paired policy comparisons and report files.

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ScenarioConfig, ScenarioKind};
use super::trial::{run_trial_indexed, trial_seed, LoopOptions, TrialOutcome, TrialResult};
use crate::vqa::OperatorMode;
use crate::Result;

/// Aggregate of one batch. Serializes identically for identical inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchReport {
    pub config_digest: String,
    pub kind: ScenarioKind,
    pub policy: OperatorMode,
    pub mean_latency: f64,
    pub master_seed: u64,
    pub trials: usize,
    pub collisions: usize,
    pub collision_rate: f64,
    /// `"k/n"`.
    pub collision_count: String,
    pub completed: usize,
    pub stopped: usize,
    pub timed_out: usize,
    pub queries: usize,
    pub late_decisions: usize,
    pub near_threshold_decisions: usize,
    pub results: Vec<TrialResult>,
}

impl BatchReport {
    fn from_results(config: &ScenarioConfig, results: Vec<TrialResult>) -> Self {
        let count = |o: TrialOutcome| results.iter().filter(|r| r.outcome == o).count();
        let collisions = results.iter().filter(|r| r.collided).count();
        let decisions = results.iter().flat_map(|r| r.decisions.iter());
        let (mut queries, mut late, mut near) = (0, 0, 0);
        for d in decisions {
            queries += 1;
            late += usize::from(d.late);
            near += usize::from(d.near_threshold);
        }
        Self {
            config_digest: config.digest(),
            kind: config.kind,
            policy: config.policy,
            mean_latency: config.latency.mean(),
            master_seed: config.master_seed,
            trials: results.len(),
            collisions,
            collision_rate: collisions as f64 / results.len() as f64,
            collision_count: format!("{collisions}/{}", results.len()),
            completed: count(TrialOutcome::Completed),
            stopped: count(TrialOutcome::Stopped),
            timed_out: count(TrialOutcome::TimedOut),
            queries,
            late_decisions: late,
            near_threshold_decisions: near,
            results,
        }
    }

    /// Sum of per-trial wall-clock times, seconds.
    pub fn wall_time(&self) -> f64 {
        self.results.iter().map(|r| r.wall_time).sum()
    }
}

/// Runs `config.trials` trials with the configured policy. Trial `i` uses
/// the seed `trial_seed(master_seed, i)` whatever the policy.
pub fn run_batch(config: &ScenarioConfig) -> Result<BatchReport> {
    config.validate()?;
    let options = LoopOptions { record_steps: config.keep_step_logs, ..LoopOptions::default() };
    let results = (0..config.trials as u64)
        .into_par_iter()
        .map(|i| run_trial_indexed(config, trial_seed(config.master_seed, i), i, options))
        .collect::<Result<Vec<_>>>()?;
    Ok(BatchReport::from_results(config, results))
}

/// Collision-rate reduction of one policy over another.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Reduction {
    Ratio(f64),
    /// The improved policy had no collisions; the ratio is at least this.
    AtLeast(f64),
    /// Neither policy collided.
    Undefined,
}

impl Reduction {
    pub fn between(baseline: &BatchReport, improved: &BatchReport) -> Self {
        match (baseline.collisions, improved.collisions) {
            (0, 0) => Reduction::Undefined,
            (b, 0) => Reduction::AtLeast(b as f64),
            (b, i) => Reduction::Ratio(b as f64 * improved.trials as f64 / (i as f64 * baseline.trials as f64)),
        }
    }

    /// Lower bound of the reduction, `None` when undefined.
    pub fn lower_bound(&self) -> Option<f64> {
        match *self {
            Reduction::Ratio(r) | Reduction::AtLeast(r) => Some(r),
            Reduction::Undefined => None,
        }
    }
}

impl fmt::Display for Reduction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Reduction::Ratio(r) => write!(f, "{r:.2}x"),
            Reduction::AtLeast(r) => write!(f, ">= {r:.2}x"),
            Reduction::Undefined => f.write_str("n/a"),
        }
    }
}

impl Serialize for Reduction {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Reduction {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        let num = |t: &str| t.trim().trim_end_matches('x').parse::<f64>().map_err(serde::de::Error::custom);
        if text == "n/a" {
            Ok(Reduction::Undefined)
        } else if let Some(rest) = text.strip_prefix(">=") {
            Ok(Reduction::AtLeast(num(rest)?))
        } else {
            Ok(Reduction::Ratio(num(&text)?))
        }
    }
}

/// Both policies on the same seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedReport {
    pub baseline: BatchReport,
    pub latency_aware: BatchReport,
    pub reduction: Reduction,
}

pub fn run_paired(config: &ScenarioConfig) -> Result<PairedReport> {
    let baseline = run_batch(&config.clone().with_policy(OperatorMode::Baseline))?;
    let latency_aware = run_batch(&config.clone().with_policy(OperatorMode::LatencyAware))?;
    let reduction = Reduction::between(&baseline, &latency_aware);
    Ok(PairedReport { baseline, latency_aware, reduction })
}

/// File stem shared by every output of one batch.
pub fn report_stem(report: &BatchReport) -> String {
    format!(
        "{}-{}-{}ms-{}-s{}",
        report.kind,
        report.policy.name(),
        (report.mean_latency * 1000.0).round() as u64,
        report.config_digest,
        report.master_seed
    )
}

/// Writes `<stem>.json`, `<stem>.csv` and `<stem>.timing.json` into `dir`.
/// The first two depend only on the inputs; wall-clock times go to the
/// timing file.
pub fn write_batch(dir: &Path, report: &BatchReport) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let stem = report_stem(report);
    let json = dir.join(format!("{stem}.json"));
    std::fs::write(&json, serde_json::to_vec_pretty(report)?)?;

    let csv = dir.join(format!("{stem}.csv"));
    let mut f = std::io::BufWriter::new(std::fs::File::create(&csv)?);
    writeln!(f, "trial,seed,outcome,collided,collision_time,end_time,min_clearance,maneuver_speed,obstacle_speed,queries")?;
    for r in &report.results {
        writeln!(
            f,
            "{},{},{},{},{},{:.2},{:.6},{:.6},{},{}",
            r.trial_index,
            r.seed,
            serde_json::to_value(r.outcome)?.as_str().unwrap_or_default(),
            r.collided,
            r.collision_time.map(|t| format!("{t:.2}")).unwrap_or_default(),
            r.end_time,
            r.min_clearance,
            r.maneuver_speed,
            r.obstacle_speed.map(|v| format!("{v:.6}")).unwrap_or_default(),
            r.decisions.len()
        )?;
    }
    f.flush()?;

    let timing = dir.join(format!("{stem}.timing.json"));
    let per_trial: Vec<f64> = report.results.iter().map(|r| r.wall_time).collect();
    std::fs::write(
        &timing,
        serde_json::to_vec_pretty(&serde_json::json!({ "total_seconds": report.wall_time(), "per_trial": per_trial }))?,
    )?;
    Ok(vec![json, csv, timing])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report(collisions: usize, trials: usize) -> BatchReport {
        let mut r = BatchReport::from_results(&ScenarioConfig::default(), Vec::new());
        r.collisions = collisions;
        r.trials = trials;
        r
    }

    #[test]
    fn reduction_cases() {
        assert_eq!(Reduction::between(&report(30, 100), &report(10, 100)), Reduction::Ratio(3.0));
        assert_eq!(Reduction::between(&report(30, 100), &report(0, 100)), Reduction::AtLeast(30.0));
        assert_eq!(Reduction::between(&report(0, 100), &report(0, 100)), Reduction::Undefined);
        for r in [Reduction::Ratio(2.5), Reduction::AtLeast(12.0), Reduction::Undefined] {
            let text = serde_json::to_string(&r).unwrap();
            assert_eq!(serde_json::from_str::<Reduction>(&text).unwrap(), r);
        }
        assert_eq!(Reduction::AtLeast(12.0).to_string(), ">= 12.00x");
    }

    #[test]
    fn small_batches_are_reproducible() {
        let mut c = ScenarioConfig::for_kind(ScenarioKind::Merge);
        c.trials = 3;
        let a = serde_json::to_string(&run_batch(&c).unwrap()).unwrap();
        let b = serde_json::to_string(&run_batch(&c).unwrap()).unwrap();
        assert_eq!(a, b);
    }
}
