//! Scenario configuration: the JSON schema read by `--config`.

use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::geometry::Extents;
use crate::latency::LatencyModel;
use crate::licp::SafetyConfig;
use crate::prediction::EkfConfig;
use crate::vqa::{DecisionTemplate, FeasibilityLimits, OperatorConfig, OperatorMode, TriggerConfig};
use crate::{Error, Result};

/// The three traffic conflicts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    /// Lane change into a lane with same-direction traffic.
    Merge,
    /// Right turn into a lane with traffic approaching from the left.
    RightTurn,
    /// Left turn across oncoming traffic.
    LeftTurn,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 3] = [ScenarioKind::Merge, ScenarioKind::RightTurn, ScenarioKind::LeftTurn];

    pub fn name(&self) -> &'static str {
        match self {
            ScenarioKind::Merge => "merge",
            ScenarioKind::RightTurn => "right-turn",
            ScenarioKind::LeftTurn => "left-turn",
        }
    }
}

impl std::fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ScenarioKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "merge" => Ok(ScenarioKind::Merge),
            "right-turn" | "right" => Ok(ScenarioKind::RightTurn),
            "left-turn" | "left" => Ok(ScenarioKind::LeftTurn),
            other => Err(Error::InvalidInput(format!("unknown scenario {other:?}"))),
        }
    }
}

/// Closed interval sampled uniformly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Range {
    pub min: f64,
    pub max: f64,
}

impl Range {
    pub const fn new(min: f64, max: f64) -> Self {
        Self { min, max }
    }

    pub fn validate(&self, what: &str) -> Result<()> {
        if !(self.min.is_finite() && self.max.is_finite() && self.min <= self.max) {
            return Err(Error::InvalidInput(format!("{what}: invalid range [{}, {}]", self.min, self.max)));
        }
        Ok(())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.min == self.max {
            self.min
        } else {
            rng.random_range(self.min..=self.max)
        }
    }
}

/// Durations of the three reference segments, seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseDurations {
    pub straight: f64,
    pub maneuver: f64,
    pub post: f64,
}

impl Default for PhaseDurations {
    fn default() -> Self {
        Self { straight: 5.0, maneuver: 2.5, post: 2.0 }
    }
}

impl PhaseDurations {
    pub fn total(&self) -> f64 {
        self.straight + self.maneuver + self.post
    }
}

/// Everything needed to build and run trials of one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioConfig {
    pub kind: ScenarioKind,
    /// Distance from the ego start to the maneuver entry, meters.
    pub approach_distance: f64,
    /// Distance of the obstacle from the conflict point when it appears, meters.
    pub spawn_distance: f64,
    pub phases: PhaseDurations,
    /// Simulation step, seconds.
    pub dt: f64,
    /// Planning horizon in steps.
    pub horizon_steps: usize,
    /// Ego speed through the maneuver, m/s.
    pub maneuver_speed: Range,
    /// Obstacle speed, m/s. With `obstacle_speed_relative` this is an offset
    /// added to the ego's maneuver speed.
    pub obstacle_speed: Range,
    pub obstacle_speed_relative: bool,
    /// Obstacle position jitter along its lane at spawn, meters (uniform +-).
    pub spawn_jitter: f64,
    /// Lateral distance between adjacent lane centers, meters.
    pub lane_width: f64,
    /// Observation noise standard deviations for `(x, y, theta)`.
    pub observation_noise: [f64; 3],
    /// Observation noise on the obstacle speed used to start the track.
    pub speed_noise: f64,
    pub ekf: EkfConfig,
    pub latency: LatencyModel,
    pub policy: OperatorMode,
    pub safety: SafetyConfig,
    pub operator: OperatorConfig,
    pub trigger: TriggerConfig,
    pub feasibility: FeasibilityLimits,
    pub brake_deceleration: f64,
    /// Hard cap on trial length, seconds.
    pub time_cap: f64,
    pub ego_extents: Extents,
    pub obstacle_extents: Extents,
    /// Overrides the scenario's default question and options.
    pub template: Option<DecisionTemplate>,
    /// Attach a risk map to queries in latency-aware mode.
    pub attach_licom: bool,
    pub trials: usize,
    pub master_seed: u64,
    /// Keep per-step logs in batch reports.
    pub keep_step_logs: bool,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self::for_kind(ScenarioKind::Merge)
    }
}

impl ScenarioConfig {
    pub fn for_kind(kind: ScenarioKind) -> Self {
        let safety = SafetyConfig::default();
        Self {
            kind,
            approach_distance: 90.0,
            spawn_distance: 30.0,
            phases: PhaseDurations::default(),
            dt: 0.01,
            horizon_steps: 40,
            maneuver_speed: Range::new(8.0, 12.0),
            obstacle_speed: match kind {
                ScenarioKind::LeftTurn => Range::new(6.0, 12.0),
                _ => Range::new(-1.0, 1.0),
            },
            // Same-direction traffic is matched to the ego's speed so that the
            // lanes only conflict where they meet.
            obstacle_speed_relative: kind != ScenarioKind::LeftTurn,
            spawn_jitter: 10.0,
            lane_width: 3.5,
            observation_noise: [0.1, 0.1, 0.01],
            speed_noise: 0.3,
            ekf: EkfConfig::default(),
            latency: LatencyModel::fixed(0.2),
            policy: OperatorMode::LatencyAware,
            safety,
            // Turning across oncoming traffic needs a longer look-ahead to
            // stop short of the far lane.
            operator: OperatorConfig::default().with_window(match kind {
                ScenarioKind::LeftTurn => 1.8,
                _ => 1.2,
            }),
            trigger: TriggerConfig::default(),
            feasibility: FeasibilityLimits::default(),
            brake_deceleration: crate::vqa::DEFAULT_BRAKE_DECELERATION,
            time_cap: 12.0,
            ego_extents: Extents::default(),
            obstacle_extents: Extents::default(),
            template: None,
            attach_licom: false,
            trials: 100,
            master_seed: 2024,
            keep_step_logs: false,
        }
    }

    pub fn with_policy(mut self, policy: OperatorMode) -> Self {
        self.policy = policy;
        self
    }

    pub fn with_latency(mut self, seconds: f64) -> Self {
        self.latency = LatencyModel::fixed(seconds);
        self
    }

    pub fn template(&self) -> DecisionTemplate {
        self.template.clone().unwrap_or_else(|| DecisionTemplate::for_kind(self.kind))
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64, what: &str| -> Result<()> {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidInput(format!("{what} must be positive, got {v}")))
            }
        };
        positive(self.approach_distance, "approach_distance")?;
        positive(self.spawn_distance, "spawn_distance")?;
        positive(self.phases.straight, "phases.straight")?;
        positive(self.phases.maneuver, "phases.maneuver")?;
        positive(self.phases.post, "phases.post")?;
        positive(self.dt, "dt")?;
        positive(self.lane_width, "lane_width")?;
        positive(self.brake_deceleration, "brake_deceleration")?;
        positive(self.time_cap, "time_cap")?;
        if (self.dt - 0.01).abs() > 1e-12 {
            return Err(Error::InvalidInput(format!("simulation step is fixed at 0.01 s, got {}", self.dt)));
        }
        if self.horizon_steps != 40 {
            return Err(Error::InvalidInput(format!("planning horizon is fixed at 40 steps, got {}", self.horizon_steps)));
        }
        self.maneuver_speed.validate("maneuver_speed")?;
        self.obstacle_speed.validate("obstacle_speed")?;
        let slowest_obstacle =
            self.obstacle_speed.min + if self.obstacle_speed_relative { self.maneuver_speed.min } else { 0.0 };
        if self.maneuver_speed.min <= 0.0 || slowest_obstacle < 0.0 {
            return Err(Error::InvalidInput("speeds must be positive".into()));
        }
        if 2.0 * self.approach_distance / self.phases.straight < self.maneuver_speed.max {
            return Err(Error::InvalidInput("approach is too short to enter the maneuver at the sampled speed".into()));
        }
        if !(self.spawn_jitter >= 0.0) {
            return Err(Error::InvalidInput("spawn_jitter must be >= 0".into()));
        }
        if self.observation_noise.iter().any(|v| !(*v >= 0.0)) || !(self.speed_noise >= 0.0) {
            return Err(Error::InvalidInput("noise levels must be >= 0".into()));
        }
        self.latency.validate()?;
        self.safety.validate()?;
        self.operator.validate()?;
        self.ego_extents.validate()?;
        self.obstacle_extents.validate()?;
        if self.trials == 0 {
            return Err(Error::InvalidInput("trial count must be >= 1".into()));
        }
        let t = self.template();
        if t.positive == t.negative {
            return Err(Error::InvalidInput("template options must differ".into()));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(text)?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Short hex digest of the canonical JSON form.
    pub fn digest(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        hex::encode(&Sha256::digest(&bytes)[..8])
    }
}
