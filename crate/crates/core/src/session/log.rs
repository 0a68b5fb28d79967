//! JSON-lines session logs and replay.
//!
//! The first line records the configuration and seed. Every message that
//! crossed the socket follows, tagged with direction and simulation step,
//! and each accepted answer adds a `decision` line with the latencies and
//! steps needed to reproduce it.

use std::collections::HashMap;
use std::io::{BufRead, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::protocol::Message;
use crate::scenario::{
    build_scenario, DecisionSource, LoopOptions, QueryView, ScenarioConfig, Simulation, SourcedAnswer, TrialResult,
};
use crate::vqa::{OperatorAnswer, VisualQuery};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Sent,
    Received,
}

/// An accepted answer with everything replay needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoggedDecision {
    pub answer: OperatorAnswer,
    pub presented_at: f64,
    pub human_latency: f64,
    pub network_latency: f64,
    /// Step at which the simulation took the answer.
    pub received_step: u64,
    /// `None` when the answer was rejected as infeasible.
    pub apply_step: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "entry", rename_all = "snake_case")]
pub enum LogEntry {
    Start { config: Box<ScenarioConfig>, seed: u64, pace: f64 },
    Message { direction: Direction, step: u64, message: Message },
    Decision(LoggedDecision),
}

pub struct SessionLog {
    out: Option<BufWriter<std::fs::File>>,
    entries: Vec<LogEntry>,
}

impl SessionLog {
    /// Keeps entries in memory and, with a path, also writes them there.
    pub fn new(path: Option<&Path>) -> Result<Self> {
        let out = match path {
            Some(p) => {
                if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                    std::fs::create_dir_all(dir)?;
                }
                Some(BufWriter::new(std::fs::File::create(p)?))
            }
            None => None,
        };
        Ok(Self { out, entries: Vec::new() })
    }

    pub fn record(&mut self, entry: LogEntry) -> Result<()> {
        if let Some(out) = &mut self.out {
            serde_json::to_writer(&mut *out, &entry)?;
            out.write_all(b"\n")?;
        }
        self.entries.push(entry);
        Ok(())
    }

    pub fn entries(&self) -> &[LogEntry] {
        &self.entries
    }

    pub fn flush(&mut self) -> Result<()> {
        if let Some(out) = &mut self.out {
            out.flush()?;
        }
        Ok(())
    }
}

pub fn read_log(path: &Path) -> Result<Vec<LogEntry>> {
    let file = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut entries = Vec::new();
    for (i, line) in file.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        entries.push(
            serde_json::from_str(&line).map_err(|e| Error::Malformed(format!("log line {}: {e}", i + 1)))?,
        );
    }
    Ok(entries)
}

/// Answers queries from a log at the steps they were originally taken.
pub struct ReplaySource {
    decisions: HashMap<u64, LoggedDecision>,
}

impl ReplaySource {
    pub fn new(entries: &[LogEntry]) -> Self {
        let decisions = entries
            .iter()
            .filter_map(|e| match e {
                LogEntry::Decision(d) => Some((d.answer.query_id, d.clone())),
                _ => None,
            })
            .collect();
        Self { decisions }
    }
}

impl DecisionSource for ReplaySource {
    fn on_query(&mut self, _: &VisualQuery, _: &QueryView<'_>) -> Result<()> {
        Ok(())
    }

    fn poll_answer(&mut self, query: &VisualQuery, step: u64, _: f64) -> Result<Option<SourcedAnswer>> {
        match self.decisions.get(&query.id) {
            Some(d) if step >= d.received_step => {
                let d = self.decisions.remove(&query.id).expect("present");
                Ok(Some(SourcedAnswer {
                    answer: d.answer,
                    human_latency: d.human_latency,
                    network_latency: d.network_latency,
                    perceived: None,
                    apply_step: d.apply_step,
                }))
            }
            _ => Ok(None),
        }
    }
}

/// Re-runs a logged session without pacing or a console.
pub fn replay_entries(entries: &[LogEntry]) -> Result<TrialResult> {
    let (config, seed) = entries
        .iter()
        .find_map(|e| match e {
            LogEntry::Start { config, seed, .. } => Some((config.as_ref().clone(), *seed)),
            _ => None,
        })
        .ok_or_else(|| Error::Malformed("log has no start entry".into()))?;
    let scene = build_scenario(&config, seed)?;
    let mut sim = Simulation::new(config, scene, 0, LoopOptions::default());
    sim.run(&mut ReplaySource::new(entries))?;
    Ok(sim.into_result())
}

pub fn replay_session(path: &Path) -> Result<TrialResult> {
    replay_entries(&read_log(path)?)
}
