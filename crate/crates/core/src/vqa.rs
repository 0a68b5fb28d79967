//! The shared-autonomy decision layer: when to ask, what to ask, how answers
//! become control actions, and the two simulated operators used in batch
//! evaluation.

use serde::{Deserialize, Serialize};

use crate::collision::{closest_obstacle, collision_prob_mc, RiskEstimate};
use crate::geometry::{step_ego, track_path, ControlCommand, EgoState, Extents, ObstacleState, Pose2, Trajectory};
use crate::licom::RiskGrid;
use crate::licp::{licp_seeded, LatencyQuery, SafetyConfig};
use crate::prediction::ObstacleTrack;
use crate::rng::{derive_seed, stream};
use crate::scenario::ScenarioKind;
use crate::{Error, Result};

/// Braking deceleration used for negative answers, m/s^2.
pub const DEFAULT_BRAKE_DECELERATION: f64 = 6.0;

/// What the ego does once a decision takes effect.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DecisionAction {
    ProceedOnTrajectory,
    BrakeToStop { deceleration: f64 },
    WaypointInsert { target: Pose2, speed: Option<f64> },
}

impl DecisionAction {
    pub fn validate(&self) -> Result<()> {
        match *self {
            DecisionAction::ProceedOnTrajectory => Ok(()),
            DecisionAction::BrakeToStop { deceleration } => {
                if deceleration > 0.0 && deceleration.is_finite() {
                    Ok(())
                } else {
                    Err(Error::InvalidInput(format!("brake deceleration must be positive, got {deceleration}")))
                }
            }
            DecisionAction::WaypointInsert { target, speed } => {
                if target.is_finite() && speed.is_none_or(|v| v.is_finite() && v >= 0.0) {
                    Ok(())
                } else {
                    Err(Error::NonFinite("waypoint"))
                }
            }
        }
    }
}

/// Question text and answer space for one scenario kind.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecisionTemplate {
    pub question: String,
    /// Option that keeps the planned maneuver.
    pub positive: String,
    /// Option that yields (brakes).
    pub negative: String,
    #[serde(default)]
    pub allow_waypoint: bool,
}

impl DecisionTemplate {
    pub fn for_kind(kind: ScenarioKind) -> Self {
        let (question, positive, negative) = match kind {
            ScenarioKind::Merge => ("On-ramp gap selection: should I merge now?", "merge", "hold"),
            ScenarioKind::LeftTurn => ("Is the current left-turn gap sufficient to cross?", "go", "wait"),
            ScenarioKind::RightTurn => ("Can I turn right before cross-traffic?", "turn", "yield"),
        };
        Self {
            question: question.to_string(),
            positive: positive.to_string(),
            negative: negative.to_string(),
            allow_waypoint: false,
        }
    }

    pub fn options(&self) -> Vec<String> {
        vec![self.positive.clone(), self.negative.clone()]
    }
}

/// A question put to the operator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VisualQuery {
    pub id: u64,
    pub issue_time: f64,
    /// Simulation step at which the scene snapshot was taken.
    pub issue_step: u64,
    pub text: String,
    pub options: Vec<String>,
    pub allow_waypoint: bool,
    /// Risk map shown with the question (latency-aware mode only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub licom: Option<RiskGrid>,
}

pub fn generate_query(
    id: u64,
    issue_time: f64,
    issue_step: u64,
    template: &DecisionTemplate,
    licom: Option<RiskGrid>,
) -> VisualQuery {
    VisualQuery {
        id,
        issue_time,
        issue_step,
        text: template.question.clone(),
        options: template.options(),
        allow_waypoint: template.allow_waypoint,
        licom,
    }
}

/// Target of a waypoint answer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Waypoint {
    pub pose: Pose2,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub speed: Option<f64>,
}

/// An operator's reply: exactly one of `option` or `waypoint`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorAnswer {
    #[serde(rename = "id")]
    pub query_id: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub option: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub waypoint: Option<Waypoint>,
    pub answered_at: f64,
}

impl OperatorAnswer {
    pub fn option(query_id: u64, option: &str, answered_at: f64) -> Self {
        Self { query_id, option: Some(option.to_string()), waypoint: None, answered_at }
    }

    pub fn waypoint(query_id: u64, waypoint: Waypoint, answered_at: f64) -> Self {
        Self { query_id, option: None, waypoint: Some(waypoint), answered_at }
    }
}

/// Maps an answer onto a control action according to the query's template.
pub fn parse_answer(query: &VisualQuery, template: &DecisionTemplate, answer: &OperatorAnswer) -> Result<DecisionAction> {
    if answer.query_id != query.id {
        return Err(Error::InvalidInput(format!("answer for query {} given to query {}", answer.query_id, query.id)));
    }
    match (&answer.option, &answer.waypoint) {
        (Some(opt), None) => {
            if !query.options.iter().any(|o| o == opt) {
                return Err(Error::UnknownOption(opt.clone()));
            }
            if *opt == template.positive {
                Ok(DecisionAction::ProceedOnTrajectory)
            } else if *opt == template.negative {
                Ok(DecisionAction::BrakeToStop { deceleration: DEFAULT_BRAKE_DECELERATION })
            } else {
                Err(Error::UnknownOption(opt.clone()))
            }
        }
        (None, Some(w)) => {
            if !query.allow_waypoint {
                return Err(Error::WaypointNotAllowed);
            }
            let action = DecisionAction::WaypointInsert { target: w.pose, speed: w.speed };
            action.validate()?;
            Ok(action)
        }
        _ => Err(Error::InvalidInput("answer must carry exactly one of option or waypoint".into())),
    }
}

/// Vehicle limits for waypoint answers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityLimits {
    /// 1/m.
    pub max_curvature: f64,
    /// m/s^2.
    pub max_deceleration: f64,
}

impl Default for FeasibilityLimits {
    fn default() -> Self {
        Self { max_curvature: 0.2, max_deceleration: 9.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "kebab-case")]
pub enum RejectReason {
    /// The waypoint is not ahead of the ego along the reference path.
    Outdated,
    Curvature { required: f64, limit: f64 },
    Deceleration { required: f64, limit: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum Feasibility {
    Accepted,
    Rejected(RejectReason),
}

/// Rejects outdated or physically infeasible waypoints. Brake and proceed
/// are always accepted.
///
/// `arc_length` is the ego's progress along `reference`.
pub fn validate_feasibility(
    action: &DecisionAction,
    state: &EgoState,
    reference: &Trajectory,
    arc_length: f64,
    limits: &FeasibilityLimits,
) -> Feasibility {
    let DecisionAction::WaypointInsert { target, speed } = *action else {
        return Feasibility::Accepted;
    };
    if reference.project(target.x, target.y) <= arc_length {
        return Feasibility::Rejected(RejectReason::Outdated);
    }
    let (xl, yl) = state.pose.to_local(target.x, target.y);
    if xl <= 0.0 {
        return Feasibility::Rejected(RejectReason::Outdated);
    }
    let d2 = xl * xl + yl * yl;
    let kappa = 2.0 * yl / d2;
    if kappa.abs() > limits.max_curvature {
        return Feasibility::Rejected(RejectReason::Curvature { required: kappa.abs(), limit: limits.max_curvature });
    }
    let path = arc_to(xl, yl);
    let v = state.speed;
    let vt = speed.unwrap_or(v);
    if vt < v {
        let required = (v * v - vt * vt) / (2.0 * path);
        if required > limits.max_deceleration {
            return Feasibility::Rejected(RejectReason::Deceleration { required, limit: limits.max_deceleration });
        }
    }
    Feasibility::Accepted
}

/// Length of the circular arc tangent to the x axis at the origin that
/// reaches the local point `(xl, yl)`.
fn arc_to(xl: f64, yl: f64) -> f64 {
    let d2 = xl * xl + yl * yl;
    let kappa = 2.0 * yl / d2;
    if kappa.abs() < 1e-12 {
        return xl;
    }
    let sweep = 2.0 * yl.atan2(xl);
    (sweep / kappa).abs()
}

/// Curvature of the arc from `state` through `target`.
pub fn waypoint_curvature(state: &EgoState, target: &Pose2) -> f64 {
    let (xl, yl) = state.pose.to_local(target.x, target.y);
    2.0 * yl / (xl * xl + yl * yl)
}

/// Ego pose `duration` seconds after `state` if `action` is in force from
/// now on. Proceeding follows the reference in time; braking follows the
/// reference path at the commanded deceleration; a waypoint follows the arc
/// through it.
pub fn predict_ego_pose(
    action: &DecisionAction,
    state: &EgoState,
    reference: &Trajectory,
    arc_length: f64,
    duration: f64,
    dt: f64,
) -> Result<Pose2> {
    match *action {
        DecisionAction::ProceedOnTrajectory => Ok(reference.pose_clamped(state.time + duration).0),
        DecisionAction::BrakeToStop { deceleration } => {
            let mut s = *state;
            let mut arc = arc_length;
            let steps = (duration / dt).round() as usize;
            for _ in 0..steps {
                if s.speed == 0.0 {
                    break;
                }
                let cmd = track_path(reference, &s, arc, -deceleration);
                let next = step_ego(&s, &cmd, dt)?;
                arc += next.pose.distance(&s.pose);
                s = next;
            }
            Ok(s.pose)
        }
        DecisionAction::WaypointInsert { target, speed } => {
            let kappa = waypoint_curvature(state, &target);
            let vt = speed.unwrap_or(state.speed);
            let mut s = *state;
            let steps = (duration / dt).round() as usize;
            let accel = ((vt - state.speed) / duration.max(dt)).clamp(-9.0, 3.0);
            for _ in 0..steps {
                s = step_ego(&s, &ControlCommand::new(accel, kappa), dt)?;
            }
            Ok(s.pose)
        }
    }
}

/// Parameters of the query trigger.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TriggerConfig {
    /// A query fires when any probe's collision probability exceeds this.
    pub threshold: f64,
    /// Spacing of probes along the reference, seconds.
    pub probe_interval: f64,
    /// Probes after the current instant.
    pub probe_count: usize,
    /// Monte-Carlo samples per probe.
    pub samples: usize,
}

impl Default for TriggerConfig {
    fn default() -> Self {
        Self { threshold: 0.15, probe_interval: 0.5, probe_count: 8, samples: 500 }
    }
}

/// Outcome of a trigger evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TriggerCheck {
    pub fired: bool,
    /// Largest probe risk seen.
    pub max_risk: f64,
    /// Offset from now of that probe, seconds.
    pub at_offset: f64,
}

/// Evaluates the instantaneous collision probability of the closest
/// obstacle along the reference at `probe_interval` spacing and fires when
/// any probe exceeds the threshold. Never fires while a query is open.
pub fn should_trigger(
    ego: &EgoState,
    ego_extents: &Extents,
    reference: &Trajectory,
    tracks: &[ObstacleTrack],
    open_query: bool,
    config: &TriggerConfig,
    seed: u64,
) -> Result<TriggerCheck> {
    let idle = TriggerCheck { fired: false, max_risk: 0.0, at_offset: 0.0 };
    if open_query || tracks.is_empty() {
        return Ok(idle);
    }
    let observed: Vec<ObstacleState> = tracks.iter().map(|t| t.observed).collect();
    let Some(id) = closest_obstacle(ego, &observed) else {
        return Ok(idle);
    };
    let track = tracks.iter().find(|t| t.observed.id == id).expect("closest id comes from tracks");
    let mut best = idle;
    for k in 0..=config.probe_count {
        let offset = k as f64 * config.probe_interval;
        let (pose, _) = reference.pose_clamped(ego.time + offset);
        let belief = track.belief.propagate(offset, &track.motion)?;
        let est = collision_prob_mc(
            &ego_extents.at(pose),
            &belief,
            &track.observed.extents,
            config.samples,
            &mut stream(seed, &[k as u64]),
        )?;
        if est.value > best.max_risk {
            best.max_risk = est.value;
            best.at_offset = offset;
        }
        if est.value > config.threshold {
            best.fired = true;
            break;
        }
    }
    Ok(best)
}

/// Which risk the simulated operator looks at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OperatorMode {
    /// Judges the maneuver as if it executed the moment the question is asked.
    Baseline,
    /// Judges the maneuver at the moment the answer will take effect.
    #[serde(alias = "lavqa")]
    LatencyAware,
}

impl OperatorMode {
    pub fn name(&self) -> &'static str {
        match self {
            OperatorMode::Baseline => "baseline",
            OperatorMode::LatencyAware => "latency-aware",
        }
    }
}

impl std::str::FromStr for OperatorMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "baseline" => Ok(OperatorMode::Baseline),
            "latency-aware" | "lavqa" => Ok(OperatorMode::LatencyAware),
            other => Err(Error::InvalidInput(format!("unknown policy {other:?}"))),
        }
    }
}

/// Settings of the simulated operator's risk perception.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatorConfig {
    /// Evenly spaced probes across the look-ahead window.
    pub probes: usize,
    /// Length of the look-ahead window, seconds.
    pub window: f64,
    pub safety: SafetyConfig,
}

impl Default for OperatorConfig {
    fn default() -> Self {
        Self { probes: 40, window: 1.2, safety: SafetyConfig::default().with_budget(50, 20) }
    }
}

impl OperatorConfig {
    pub fn with_window(mut self, window: f64) -> Self {
        self.window = window;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.probes == 0 || !(self.window >= 0.0 && self.window.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "operator needs at least one probe and a finite window, got {} over {}",
                self.probes, self.window
            )));
        }
        self.safety.validate()
    }
}

/// What the operator sees when the question is asked.
#[derive(Debug, Clone, Copy)]
pub struct OperatorContext<'a> {
    pub ego: &'a EgoState,
    pub ego_extents: &'a Extents,
    pub reference: &'a Trajectory,
    pub track: &'a ObstacleTrack,
    /// Latency of the answer, seconds.
    pub latency: f64,
}

/// Risk of the positive option as perceived in `mode`: the largest latency
/// aware collision probability over the planning horizon, which starts at
/// the question time in baseline mode and at the effect time otherwise.
/// Probe `k` uses the same random stream in both modes, so the modes agree
/// exactly when the latency is zero.
pub fn perceived_risk(ctx: &OperatorContext<'_>, mode: OperatorMode, config: &OperatorConfig, seed: u64) -> Result<RiskEstimate> {
    let start = match mode {
        OperatorMode::Baseline => 0.0,
        OperatorMode::LatencyAware => ctx.latency,
    };
    let spacing = config.window / config.probes as f64;
    let mut best: Option<RiskEstimate> = None;
    for k in 0..config.probes {
        let offset = start + k as f64 * spacing;
        let query = LatencyQuery {
            issue_time: ctx.ego.time,
            latency: offset,
            ego_at_effect: ctx.reference.pose_clamped(ctx.ego.time + offset).0,
            ego_extents: *ctx.ego_extents,
            belief: ctx.track.belief.clone(),
            motion: ctx.track.motion,
            obstacle_extents: ctx.track.observed.extents,
        };
        let est = licp_seeded(&query, &config.safety, derive_seed(seed, &[k as u64]))?;
        if best.is_none_or(|b| est.value > b.value) {
            best = Some(est);
        }
    }
    best.ok_or_else(|| Error::InvalidInput("operator horizon must have at least one probe".into()))
}

/// A simulated answer and the risk behind it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorDecision {
    pub answer: OperatorAnswer,
    pub perceived: RiskEstimate,
}

/// Best-effort operator: answers negative iff the perceived risk of the
/// positive option reaches lambda.
pub fn simulated_operator(
    query: &VisualQuery,
    template: &DecisionTemplate,
    mode: OperatorMode,
    ctx: &OperatorContext<'_>,
    config: &OperatorConfig,
    seed: u64,
) -> Result<OperatorDecision> {
    let perceived = perceived_risk(ctx, mode, config, seed)?;
    let option = if perceived.value >= config.safety.lambda { &template.negative } else { &template.positive };
    Ok(OperatorDecision { answer: OperatorAnswer::option(query.id, option, query.issue_time), perceived })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prediction::{MixtureBelief, MotionModel};
    use nalgebra::{Matrix3, Vector3};

    fn straight(speed: f64, seconds: f64) -> Trajectory {
        let n = (seconds / 0.01).round() as usize;
        Trajectory::rollout(EgoState::new(Pose2::origin(), speed, 0.0), &vec![ControlCommand::coast(); n], 0.01)
            .unwrap()
    }

    fn track_at(pose: Pose2, v: (f64, f64), cov: Matrix3<f64>) -> ObstacleTrack {
        ObstacleTrack {
            observed: ObstacleState { id: 3, pose, velocity: v, extents: Extents::default() },
            belief: MixtureBelief::single(pose, cov, 0.0),
            motion: MotionModel::constant_velocity(v.0, v.1),
        }
    }

    #[test]
    fn templates_match_scenarios() {
        assert_eq!(DecisionTemplate::for_kind(ScenarioKind::Merge).options(), ["merge", "hold"]);
        assert_eq!(DecisionTemplate::for_kind(ScenarioKind::LeftTurn).options(), ["go", "wait"]);
        assert_eq!(DecisionTemplate::for_kind(ScenarioKind::RightTurn).options(), ["turn", "yield"]);
        assert_eq!(
            DecisionTemplate::for_kind(ScenarioKind::LeftTurn).question,
            "Is the current left-turn gap sufficient to cross?"
        );
    }

    #[test]
    fn every_option_maps_to_one_action() {
        for kind in [ScenarioKind::Merge, ScenarioKind::LeftTurn, ScenarioKind::RightTurn] {
            let t = DecisionTemplate::for_kind(kind);
            let q = generate_query(1, 0.0, 0, &t, None);
            let actions: Vec<_> =
                q.options.iter().map(|o| parse_answer(&q, &t, &OperatorAnswer::option(1, o, 0.0)).unwrap()).collect();
            assert_eq!(actions[0], DecisionAction::ProceedOnTrajectory);
            assert_eq!(actions[1], DecisionAction::BrakeToStop { deceleration: 6.0 });
        }
    }

    #[test]
    fn parse_errors() {
        let t = DecisionTemplate::for_kind(ScenarioKind::RightTurn);
        let q = generate_query(4, 0.0, 0, &t, None);
        assert!(matches!(parse_answer(&q, &t, &OperatorAnswer::option(4, "maybe", 0.0)), Err(Error::UnknownOption(_))));
        let w = Waypoint { pose: Pose2::new(10.0, 0.0, 0.0), speed: None };
        assert!(matches!(parse_answer(&q, &t, &OperatorAnswer::waypoint(4, w, 0.0)), Err(Error::WaypointNotAllowed)));
        assert!(parse_answer(&q, &t, &OperatorAnswer::option(5, "turn", 0.0)).is_err());
    }

    #[test]
    fn feasibility_rules() {
        let reference = straight(10.0, 5.0);
        let state = EgoState::new(Pose2::new(20.0, 0.0, 0.0), 10.0, 2.0);
        let limits = FeasibilityLimits::default();
        let brake = DecisionAction::BrakeToStop { deceleration: 6.0 };
        assert_eq!(validate_feasibility(&brake, &state, &reference, 20.0, &limits), Feasibility::Accepted);
        let behind = DecisionAction::WaypointInsert { target: Pose2::new(18.0, 0.0, 0.0), speed: None };
        assert_eq!(
            validate_feasibility(&behind, &state, &reference, 20.0, &limits),
            Feasibility::Rejected(RejectReason::Outdated)
        );
        // 15 m/s to rest over 7.5 m needs 15 m/s^2.
        let fast = EgoState { speed: 15.0, ..state };
        let hard = DecisionAction::WaypointInsert { target: Pose2::new(27.5, 0.0, 0.0), speed: Some(0.0) };
        match validate_feasibility(&hard, &fast, &reference, 20.0, &limits) {
            Feasibility::Rejected(RejectReason::Deceleration { required, .. }) => assert!((required - 15.0).abs() < 1e-9),
            other => panic!("unexpected {other:?}"),
        }
        let sharp = DecisionAction::WaypointInsert { target: Pose2::new(22.0, 3.0, 0.0), speed: None };
        assert!(matches!(
            validate_feasibility(&sharp, &state, &reference, 20.0, &limits),
            Feasibility::Rejected(RejectReason::Curvature { .. })
        ));
        let fine = DecisionAction::WaypointInsert { target: Pose2::new(35.0, 1.0, 0.0), speed: Some(8.0) };
        assert_eq!(validate_feasibility(&fine, &state, &reference, 20.0, &limits), Feasibility::Accepted);
    }

    #[test]
    fn trigger_edge_cases() {
        let reference = straight(10.0, 9.0);
        let ego = EgoState::new(Pose2::origin(), 10.0, 0.0);
        let cfg = TriggerConfig::default();
        let ext = Extents::default();
        assert!(!should_trigger(&ego, &ext, &reference, &[], false, &cfg, 1).unwrap().fired);
        // Static obstacle sitting on the path 20 m ahead, reached at t = 2 s.
        let t = track_at(Pose2::new(20.0, 0.0, 0.0), (0.0, 0.0), Matrix3::zeros());
        let check = should_trigger(&ego, &ext, &reference, std::slice::from_ref(&t), false, &cfg, 1).unwrap();
        assert!(check.fired);
        // Fires at the first probe over the threshold, no later than contact.
        assert!(check.max_risk > cfg.threshold && check.at_offset <= 2.0);
        assert!(!should_trigger(&ego, &ext, &reference, &[t], true, &cfg, 1).unwrap().fired);
    }

    #[test]
    fn zero_risk_scene_gets_positive_answers() {
        let reference = straight(10.0, 9.0);
        let ego = EgoState::new(Pose2::origin(), 10.0, 0.0);
        let t = DecisionTemplate::for_kind(ScenarioKind::Merge);
        let q = generate_query(1, 0.0, 0, &t, None);
        let track = track_at(Pose2::new(0.0, 40.0, 0.0), (10.0, 0.0), Matrix3::from_diagonal(&Vector3::new(0.5, 0.5, 0.01)));
        let ext = Extents::default();
        for mode in [OperatorMode::Baseline, OperatorMode::LatencyAware] {
            let ctx = OperatorContext { ego: &ego, ego_extents: &ext, reference: &reference, track: &track, latency: 0.3 };
            let d = simulated_operator(&q, &t, mode, &ctx, &OperatorConfig::default(), 9).unwrap();
            assert_eq!(d.answer.option.as_deref(), Some("merge"));
        }
    }

    #[test]
    fn modes_coincide_without_latency() {
        let reference = straight(10.0, 9.0);
        let ego = EgoState::new(Pose2::origin(), 10.0, 0.0);
        let track = track_at(
            Pose2::new(25.0, 0.5, std::f64::consts::PI),
            (-8.0, 0.0),
            Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, 0.01)),
        );
        let ext = Extents::default();
        let ctx = OperatorContext { ego: &ego, ego_extents: &ext, reference: &reference, track: &track, latency: 0.0 };
        let cfg = OperatorConfig::default();
        let a = perceived_risk(&ctx, OperatorMode::Baseline, &cfg, 5).unwrap();
        let b = perceived_risk(&ctx, OperatorMode::LatencyAware, &cfg, 5).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
    }

    #[test]
    fn mode_names_parse() {
        assert_eq!("lavqa".parse::<OperatorMode>().unwrap(), OperatorMode::LatencyAware);
        assert_eq!("baseline".parse::<OperatorMode>().unwrap(), OperatorMode::Baseline);
        assert!("other".parse::<OperatorMode>().is_err());
    }

    #[test]
    fn brake_prediction_stops_short() {
        let reference = straight(10.0, 9.0);
        let ego = EgoState::new(Pose2::origin(), 10.0, 0.0);
        let p = predict_ego_pose(&DecisionAction::BrakeToStop { deceleration: 6.0 }, &ego, &reference, 0.0, 3.0, 0.01)
            .unwrap();
        assert!((p.x - 100.0 / 12.0).abs() < 1e-6);
    }
}
