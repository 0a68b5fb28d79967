//! Decision latency: human plus network delay models and the queue that
//! holds decisions until the step at which they take effect.

use std::collections::VecDeque;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::vqa::DecisionAction;
use crate::{Error, Result};

/// Tolerance when converting a time to a step index, so that values such as
/// `0.2 / 0.01 = 20.000000000000004` do not round up a whole step.
const STEP_EPS: f64 = 1e-9;

/// One delay component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Delay {
    Fixed { seconds: f64 },
    /// Uniform on `[mean - half_width, mean + half_width]`.
    Jitter { mean: f64, half_width: f64 },
}

impl Delay {
    pub fn fixed(seconds: f64) -> Self {
        Delay::Fixed { seconds }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Delay::Fixed { seconds } => seconds.is_finite() && seconds >= 0.0,
            Delay::Jitter { mean, half_width } => {
                mean.is_finite() && half_width.is_finite() && half_width >= 0.0 && mean - half_width >= 0.0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("delay {self:?} can go negative or is not finite")))
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Delay::Fixed { seconds } => seconds,
            Delay::Jitter { mean, .. } => mean,
        }
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Delay::Fixed { seconds } => seconds,
            Delay::Jitter { mean, half_width } => {
                if half_width == 0.0 {
                    mean
                } else {
                    (mean + rng.random_range(-half_width..=half_width)).max(0.0)
                }
            }
        }
    }
}

/// Total decision latency as the sum of a human and a network component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatencyModel {
    pub human: Delay,
    pub network: Delay,
}

impl Default for LatencyModel {
    fn default() -> Self {
        Self::fixed(0.0)
    }
}

impl LatencyModel {
    /// Fixed total latency carried entirely by the human component.
    pub fn fixed(seconds: f64) -> Self {
        Self { human: Delay::fixed(seconds), network: Delay::fixed(0.0) }
    }

    pub fn validate(&self) -> Result<()> {
        self.human.validate()?;
        self.network.validate()
    }

    pub fn mean(&self) -> f64 {
        self.human.mean() + self.network.mean()
    }
}

/// Draws a total latency, seconds.
pub fn draw_latency<R: Rng + ?Sized>(model: &LatencyModel, rng: &mut R) -> f64 {
    model.human.draw(rng) + model.network.draw(rng)
}

/// First step index whose time is at or after `time`.
pub fn step_at_or_after(time: f64, dt: f64) -> u64 {
    ((time / dt) - STEP_EPS).ceil().max(0.0) as u64
}

/// A decision waiting for its effect step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PendingDecision {
    pub query_id: u64,
    pub issued_at: f64,
    pub latency: f64,
    /// Index of the step at which the decision is applied.
    pub apply_step: u64,
    /// `apply_step * dt`.
    pub apply_at: f64,
    pub action: DecisionAction,
    /// Insertion order, used to keep equal apply steps first-in first-out.
    pub seq: u64,
}

/// Delayed decisions ordered by apply step, FIFO among equals.
#[derive(Debug, Clone)]
pub struct DecisionQueue {
    dt: f64,
    items: VecDeque<PendingDecision>,
    next_seq: u64,
}

impl DecisionQueue {
    pub fn new(dt: f64) -> Self {
        Self { dt, items: VecDeque::new(), next_seq: 0 }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Stores a decision that takes effect at the first step boundary at or
    /// after `issued_at + latency`.
    pub fn enqueue(
        &mut self,
        query_id: u64,
        action: DecisionAction,
        issued_at: f64,
        latency: f64,
    ) -> Result<PendingDecision> {
        if !(latency >= 0.0) || !latency.is_finite() || !issued_at.is_finite() {
            return Err(Error::InvalidInput(format!("latency must be finite and >= 0, got {latency}")));
        }
        let apply_step = step_at_or_after(issued_at + latency, self.dt);
        let decision = PendingDecision {
            query_id,
            issued_at,
            latency,
            apply_step,
            apply_at: apply_step as f64 * self.dt,
            action,
            seq: self.next_seq,
        };
        self.next_seq += 1;
        let pos = self.items.partition_point(|d| d.apply_step <= apply_step);
        self.items.insert(pos, decision.clone());
        Ok(decision)
    }

    /// Removes and returns every decision due at or before `step`.
    pub fn poll_due_step(&mut self, step: u64) -> Vec<PendingDecision> {
        let n = self.items.partition_point(|d| d.apply_step <= step);
        self.items.drain(..n).collect()
    }

    /// Removes and returns every decision with `apply_at <= now`.
    pub fn poll_due(&mut self, now: f64) -> Vec<PendingDecision> {
        let step = ((now / self.dt) + STEP_EPS).floor().max(0.0) as u64;
        self.poll_due_step(step)
    }

    pub fn peek(&self) -> Option<&PendingDecision> {
        self.items.front()
    }
}
