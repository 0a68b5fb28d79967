//! The closed-loop simulation of one trial.
//!
//! Each 0.01 s step runs in a fixed order: observe the obstacle and update
//! its track, check for contact, check end conditions, open a query when the
//! trigger fires, collect an answer and queue it with its latency, apply
//! every decision that is due, then integrate the ego one step.

use serde::{Deserialize, Serialize};

use super::config::{ScenarioConfig, ScenarioKind};
use super::world::{build_scenario, Scene};
use crate::collision::RiskEstimate;
use crate::geometry::{rect_distance, rect_intersects, step_ego, track_path, ControlCommand, EgoState, ObstacleState, Pose2};
use crate::latency::{step_at_or_after, DecisionQueue, PendingDecision};
use crate::licom::{compute_licom, EgoTemplate, GridSpec, LicomConfig, RiskGrid};
use crate::prediction::{EkfTracker, ObstacleTrack};
use crate::rng::{derive_seed, stream, tag};
use crate::vqa::{
    generate_query, parse_answer, should_trigger, simulated_operator, validate_feasibility, waypoint_curvature,
    DecisionAction, DecisionTemplate, Feasibility, OperatorAnswer, OperatorContext, OperatorMode, VisualQuery,
};
use crate::Result;

/// Seconds of obstacle motion checked before a stopped ego ends the trial.
const CLEARANCE_LOOKAHEAD: f64 = 5.0;

/// How the ego is being driven.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum EgoMode {
    Following,
    Braking { deceleration: f64 },
    Waypoint { curvature: f64, accel: f64, target_speed: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrialOutcome {
    /// Reached the end of the reference trajectory.
    Completed,
    Collided,
    /// Came to rest after braking with the obstacle's path clear.
    Stopped,
    TimedOut,
}

/// One logged simulation step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: u64,
    pub ego: EgoState,
    pub obstacle: Option<Pose2>,
}

/// Everything known about one query, from issue to application.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionRecord {
    pub query_id: u64,
    pub issued_at: f64,
    pub issue_step: u64,
    pub option: Option<String>,
    pub action: Option<DecisionAction>,
    pub feasibility: Option<Feasibility>,
    /// Risk the operator based the answer on, when known.
    pub perceived: Option<RiskEstimate>,
    pub human_latency: f64,
    pub network_latency: f64,
    pub apply_step: Option<u64>,
    pub apply_at: Option<f64>,
    /// The answer arrived after its ideal apply time and was applied late.
    pub late: bool,
    /// Perceived risk within 3 standard errors of lambda.
    pub near_threshold: bool,
}

/// Outcome of one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub trial_index: u64,
    pub seed: u64,
    pub kind: ScenarioKind,
    pub policy: OperatorMode,
    pub collided: bool,
    pub collision_time: Option<f64>,
    pub outcome: TrialOutcome,
    pub end_time: f64,
    /// Smallest footprint separation observed, meters.
    pub min_clearance: f64,
    pub maneuver_speed: f64,
    pub obstacle_speed: Option<f64>,
    pub decisions: Vec<DecisionRecord>,
    /// `(time, perceived risk)` at every answered query.
    pub perceived_trace: Vec<(f64, f64)>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub steps: Vec<StepRecord>,
    /// Wall-clock seconds; excluded from serialized reports so they stay
    /// reproducible.
    #[serde(skip)]
    pub wall_time: f64,
}

impl TrialResult {
    /// Recomputes contact from the step log.
    pub fn collision_from_log(&self, config: &ScenarioConfig) -> bool {
        self.steps.iter().any(|s| {
            s.obstacle.is_some_and(|o| {
                rect_intersects(&config.ego_extents.at(s.ego.pose), &config.obstacle_extents.at(o))
            })
        })
    }

    /// The ego stays on the reference until the first decision that
    /// changes its mode takes effect.
    pub fn follows_reference_until_first_change(&self, scene: &Scene) -> bool {
        let change = self
            .decisions
            .iter()
            .filter(|d| !matches!(d.action, Some(DecisionAction::ProceedOnTrajectory) | None))
            .filter_map(|d| d.apply_step)
            .min()
            .unwrap_or(u64::MAX);
        self.steps.iter().filter(|s| s.step <= change).all(|s| {
            let r = scene.reference.sample(s.step as usize);
            s.ego.pose == r.pose && s.ego.speed == r.speed
        })
    }
}

/// What the operator-side decision maker sees when a query opens.
pub struct QueryView<'a> {
    pub config: &'a ScenarioConfig,
    pub scene: &'a Scene,
    pub ego: &'a EgoState,
    pub track: &'a ObstacleTrack,
    pub step: u64,
    pub trial_seed: u64,
}

/// An answer with the latency components it incurred.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourcedAnswer {
    pub answer: OperatorAnswer,
    pub human_latency: f64,
    pub network_latency: f64,
    pub perceived: Option<RiskEstimate>,
    /// Forces the apply step (used when replaying a log).
    pub apply_step: Option<u64>,
}

/// Supplies answers to queries: the simulated operator, a live console or
/// a recorded session.
pub trait DecisionSource {
    fn on_query(&mut self, query: &VisualQuery, view: &QueryView<'_>) -> Result<()>;
    /// Answer to the open query if one is available at `step`.
    fn poll_answer(&mut self, query: &VisualQuery, step: u64, time: f64) -> Result<Option<SourcedAnswer>>;
}

/// Never answers.
pub struct NoOperator;

impl DecisionSource for NoOperator {
    fn on_query(&mut self, _: &VisualQuery, _: &QueryView<'_>) -> Result<()> {
        Ok(())
    }
    fn poll_answer(&mut self, _: &VisualQuery, _: u64, _: f64) -> Result<Option<SourcedAnswer>> {
        Ok(None)
    }
}

/// The best-effort simulated operator, answering immediately with the
/// configured latency.
pub struct SimulatedOperator {
    pub mode: OperatorMode,
    pending: Option<SourcedAnswer>,
}

impl SimulatedOperator {
    pub fn new(mode: OperatorMode) -> Self {
        Self { mode, pending: None }
    }
}

impl DecisionSource for SimulatedOperator {
    fn on_query(&mut self, query: &VisualQuery, view: &QueryView<'_>) -> Result<()> {
        let cfg = view.config;
        let mut lat_rng = stream(view.trial_seed, &[tag::LATENCY, query.id]);
        let human = cfg.latency.human.draw(&mut lat_rng);
        let network = cfg.latency.network.draw(&mut lat_rng);
        let ctx = OperatorContext {
            ego: view.ego,
            ego_extents: &cfg.ego_extents,
            reference: &view.scene.reference,
            track: view.track,
            latency: human + network,
        };
        let seed = derive_seed(view.trial_seed, &[tag::OPERATOR, query.id]);
        let decision = simulated_operator(query, &cfg.template(), self.mode, &ctx, &cfg.operator, seed)?;
        self.pending = Some(SourcedAnswer {
            answer: decision.answer,
            human_latency: human,
            network_latency: network,
            perceived: Some(decision.perceived),
            apply_step: None,
        });
        Ok(())
    }

    fn poll_answer(&mut self, _: &VisualQuery, _: u64, _: f64) -> Result<Option<SourcedAnswer>> {
        Ok(self.pending.take())
    }
}

/// Options that change the loop itself rather than the scene.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoopOptions {
    pub decisions: bool,
    pub stop_on_collision: bool,
    pub record_steps: bool,
}

impl Default for LoopOptions {
    fn default() -> Self {
        Self { decisions: true, stop_on_collision: true, record_steps: true }
    }
}

#[derive(Debug, Clone)]
struct OpenQuery {
    query: VisualQuery,
    record: usize,
    answered: bool,
}

/// Snapshot handed to the session gateway each step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldView {
    pub step: u64,
    pub time: f64,
    pub ego: EgoState,
    pub obstacles: Vec<ObstacleState>,
}

/// A single trial advanced one step at a time.
pub struct Simulation {
    pub config: ScenarioConfig,
    pub scene: Scene,
    options: LoopOptions,
    trial_index: u64,
    step: u64,
    ego: EgoState,
    arc_length: f64,
    mode: EgoMode,
    tracker: Option<EkfTracker>,
    queue: DecisionQueue,
    open: Option<OpenQuery>,
    next_query_id: u64,
    decisions: Vec<DecisionRecord>,
    perceived_trace: Vec<(f64, f64)>,
    steps: Vec<StepRecord>,
    min_clearance: f64,
    collision_time: Option<f64>,
    outcome: Option<TrialOutcome>,
    truth: Option<ObstacleState>,
}

impl Simulation {
    pub fn new(config: ScenarioConfig, scene: Scene, trial_index: u64, options: LoopOptions) -> Self {
        let ego = scene.ego_start;
        let dt = config.dt;
        Self {
            config,
            scene,
            options,
            trial_index,
            step: 0,
            ego,
            arc_length: 0.0,
            mode: EgoMode::Following,
            tracker: None,
            queue: DecisionQueue::new(dt),
            open: None,
            next_query_id: 1,
            decisions: Vec::new(),
            perceived_trace: Vec::new(),
            steps: Vec::new(),
            min_clearance: f64::INFINITY,
            collision_time: None,
            outcome: None,
            truth: None,
        }
    }

    pub fn step_index(&self) -> u64 {
        self.step
    }

    pub fn time(&self) -> f64 {
        self.step as f64 * self.config.dt
    }

    pub fn ego(&self) -> &EgoState {
        &self.ego
    }

    pub fn mode(&self) -> EgoMode {
        self.mode
    }

    pub fn is_finished(&self) -> bool {
        self.outcome.is_some()
    }

    pub fn open_query(&self) -> Option<&VisualQuery> {
        self.open.as_ref().map(|o| &o.query)
    }

    /// True while a query is open and no answer has been accepted yet.
    pub fn awaiting_answer(&self) -> bool {
        self.open.as_ref().is_some_and(|o| !o.answered)
    }

    pub fn track(&self) -> Option<ObstacleTrack> {
        self.tracker.as_ref().map(EkfTracker::track)
    }

    pub fn decisions(&self) -> &[DecisionRecord] {
        &self.decisions
    }

    pub fn view(&self) -> WorldView {
        WorldView { step: self.step, time: self.time(), ego: self.ego, obstacles: self.truth.into_iter().collect() }
    }

    fn observe(&mut self) -> Result<()> {
        let t = self.time();
        self.truth = self.scene.obstacle.and_then(|o| o.state_at(t));
        let Some(truth) = self.truth else {
            return Ok(());
        };
        let mut rng = stream(self.scene.seed, &[tag::OBSERVATION, self.step]);
        let n = self.config.observation_noise;
        let gauss = |rng: &mut crate::rng::StreamRng, s: f64| -> f64 {
            if s == 0.0 {
                0.0
            } else {
                s * rand::Rng::sample::<f64, _>(rng, rand_distr::StandardNormal)
            }
        };
        let pose = Pose2::new(
            truth.pose.x + gauss(&mut rng, n[0]),
            truth.pose.y + gauss(&mut rng, n[1]),
            truth.pose.theta + gauss(&mut rng, n[2]),
        );
        match &mut self.tracker {
            None => {
                let (vx, vy) = truth.velocity;
                let observed = ObstacleState {
                    pose,
                    velocity: (
                        vx + gauss(&mut rng, self.config.speed_noise),
                        vy + gauss(&mut rng, self.config.speed_noise),
                    ),
                    ..truth
                };
                self.tracker = Some(EkfTracker::initialize(&observed, t, self.config.ekf));
            }
            Some(tracker) => {
                tracker.predict(self.config.dt)?;
                tracker.update(&pose)?;
            }
        }
        Ok(())
    }

    fn obstacle_path_clear(&self) -> bool {
        let Some(script) = self.scene.obstacle else {
            return true;
        };
        let ego = self.config.ego_extents.at(self.ego.pose);
        let (vx, vy) = script.velocity();
        let t0 = self.time();
        (0..=(CLEARANCE_LOOKAHEAD / 0.1) as usize).all(|j| {
            let t = t0 + j as f64 * 0.1;
            let pose = script.spawn_pose.translated(vx * (t - script.spawn_time), vy * (t - script.spawn_time));
            !rect_intersects(&ego, &script.extents.at(pose))
        })
    }

    fn finish(&mut self, outcome: TrialOutcome) {
        self.outcome = Some(outcome);
    }

    fn open_new_query(&mut self, source: &mut dyn DecisionSource) -> Result<()> {
        let Some(tracker) = &self.tracker else {
            return Ok(());
        };
        let track = tracker.track();
        let check = should_trigger(
            &self.ego,
            &self.config.ego_extents,
            &self.scene.reference,
            std::slice::from_ref(&track),
            false,
            &self.config.trigger,
            derive_seed(self.scene.seed, &[tag::TRIGGER, self.step]),
        )?;
        if !check.fired {
            return Ok(());
        }
        let id = self.next_query_id;
        self.next_query_id += 1;
        let template: DecisionTemplate = self.config.template();
        let licom = if self.config.attach_licom && source_wants_licom(&self.config) {
            Some(self.query_licom(&track, id)?)
        } else {
            None
        };
        let query = generate_query(id, self.time(), self.step, &template, licom);
        self.decisions.push(DecisionRecord {
            query_id: id,
            issued_at: self.time(),
            issue_step: self.step,
            option: None,
            action: None,
            feasibility: None,
            perceived: None,
            human_latency: 0.0,
            network_latency: 0.0,
            apply_step: None,
            apply_at: None,
            late: false,
            near_threshold: false,
        });
        let view = QueryView {
            config: &self.config,
            scene: &self.scene,
            ego: &self.ego,
            track: &track,
            step: self.step,
            trial_seed: self.scene.seed,
        };
        source.on_query(&query, &view)?;
        self.open = Some(OpenQuery { query, record: self.decisions.len() - 1, answered: false });
        Ok(())
    }

    /// Risk map around the ego at the expected latency.
    pub fn query_licom(&self, track: &ObstacleTrack, id: u64) -> Result<RiskGrid> {
        let tau = self.config.latency.mean();
        let heading = self.scene.reference.pose_clamped(self.time() + tau).0.theta;
        let spec = GridSpec::centered(self.ego.pose.x, self.ego.pose.y, 40.0, 1.0)?;
        let cfg = LicomConfig { safety: self.config.safety.with_budget(20, 10), pruning: true };
        compute_licom(
            &spec,
            &EgoTemplate { heading, extents: self.config.ego_extents },
            Some(track),
            tau,
            self.time(),
            &cfg,
            derive_seed(self.scene.seed, &[tag::OVERLAY, id]),
        )
    }

    fn collect_answer(&mut self, source: &mut dyn DecisionSource) -> Result<()> {
        let Some(open) = &self.open else {
            return Ok(());
        };
        if open.answered {
            return Ok(());
        }
        let Some(sourced) = source.poll_answer(&open.query, self.step, self.time())? else {
            return Ok(());
        };
        let query = open.query.clone();
        let record = open.record;
        let template = self.config.template();
        let action = parse_answer(&query, &template, &sourced.answer)?;
        let feasibility = validate_feasibility(
            &action,
            &self.ego,
            &self.scene.reference,
            self.arc_length,
            &self.config.feasibility,
        );
        let latency = sourced.human_latency + sourced.network_latency;
        let ideal = step_at_or_after(query.issue_time + latency, self.config.dt);
        let apply_step = sourced.apply_step.unwrap_or(ideal).max(self.step);
        let late = apply_step > ideal;
        let lambda = self.config.operator.safety.lambda;
        let rec = &mut self.decisions[record];
        rec.option = sourced.answer.option.clone();
        rec.action = Some(action);
        rec.feasibility = Some(feasibility);
        rec.perceived = sourced.perceived;
        rec.human_latency = sourced.human_latency;
        rec.network_latency = sourced.network_latency;
        rec.late = late;
        if let Some(p) = sourced.perceived {
            rec.near_threshold = (p.value - lambda).abs() <= 3.0 * p.stderr && p.stderr > 0.0;
            self.perceived_trace.push((query.issue_time, p.value));
        }
        if feasibility == Feasibility::Accepted {
            let latency_to_apply = apply_step as f64 * self.config.dt - query.issue_time;
            let pending = self.queue.enqueue(query.id, action, query.issue_time, latency_to_apply.max(0.0))?;
            debug_assert_eq!(pending.apply_step, apply_step);
            rec.apply_step = Some(pending.apply_step);
            rec.apply_at = Some(pending.apply_at);
            if let Some(o) = &mut self.open {
                o.answered = true;
            }
        } else {
            // Rejected answers close the query without effect.
            self.open = None;
        }
        Ok(())
    }

    fn apply(&mut self, decision: PendingDecision) {
        match decision.action {
            DecisionAction::ProceedOnTrajectory => {}
            DecisionAction::BrakeToStop { deceleration } => {
                self.mode = EgoMode::Braking { deceleration };
            }
            DecisionAction::WaypointInsert { target, speed } => {
                let curvature = waypoint_curvature(&self.ego, &target);
                let target_speed = speed.unwrap_or(self.ego.speed);
                let dist = self.ego.pose.distance(&target).max(0.1);
                let v = self.ego.speed;
                let accel = (target_speed * target_speed - v * v) / (2.0 * dist);
                self.mode = EgoMode::Waypoint { curvature, accel, target_speed };
            }
        }
        if self.open.as_ref().is_some_and(|o| o.query.id == decision.query_id) {
            self.open = None;
        }
    }

    fn integrate(&mut self) -> Result<()> {
        let dt = self.config.dt;
        let next_step = self.step + 1;
        match self.mode {
            EgoMode::Following => {
                let s = self.scene.reference.sample(next_step as usize);
                self.ego = EgoState::new(s.pose, s.speed, next_step as f64 * dt);
                self.arc_length = s.arc_length;
            }
            EgoMode::Braking { deceleration } => {
                let cmd = track_path(&self.scene.reference, &self.ego, self.arc_length, -deceleration);
                self.advance(&cmd)?;
            }
            EgoMode::Waypoint { curvature, accel, target_speed } => {
                let v = self.ego.speed;
                let a = if (accel < 0.0 && v <= target_speed) || (accel > 0.0 && v >= target_speed) { 0.0 } else { accel };
                self.advance(&ControlCommand::new(a, curvature))?;
            }
        }
        self.step = next_step;
        Ok(())
    }

    fn advance(&mut self, cmd: &ControlCommand) -> Result<()> {
        let next = step_ego(&self.ego, cmd, self.config.dt)?;
        self.arc_length += next.pose.distance(&self.ego.pose);
        self.ego = EgoState { time: (self.step + 1) as f64 * self.config.dt, ..next };
        Ok(())
    }

    /// Runs one step of the loop. Returns `false` once the trial has ended.
    pub fn step(&mut self, source: &mut dyn DecisionSource) -> Result<bool> {
        if self.outcome.is_some() {
            return Ok(false);
        }
        self.observe()?;
        if self.options.record_steps {
            self.steps.push(StepRecord { step: self.step, ego: self.ego, obstacle: self.truth.map(|o| o.pose) });
        }
        let t = self.time();
        if let Some(truth) = self.truth {
            let ego_fp = self.config.ego_extents.at(self.ego.pose);
            let obs_fp = truth.footprint();
            self.min_clearance = self.min_clearance.min(rect_distance(&ego_fp, &obs_fp));
            if self.collision_time.is_none() && rect_intersects(&ego_fp, &obs_fp) {
                self.collision_time = Some(t);
                if self.options.stop_on_collision {
                    self.finish(TrialOutcome::Collided);
                    return Ok(false);
                }
            }
        }
        let last = (self.scene.reference.len() - 1) as u64;
        match self.mode {
            EgoMode::Following if self.step >= last => {
                self.finish(TrialOutcome::Completed);
                return Ok(false);
            }
            EgoMode::Braking { .. } if self.ego.speed == 0.0 && self.obstacle_path_clear() => {
                self.finish(TrialOutcome::Stopped);
                return Ok(false);
            }
            _ => {}
        }
        if t >= self.config.time_cap - 1e-9 {
            self.finish(TrialOutcome::TimedOut);
            return Ok(false);
        }
        if self.options.decisions && self.mode == EgoMode::Following {
            // Past the conflict point the maneuver is committed and the
            // question no longer applies.
            if self.open.is_none() && t < self.scene.conflict_time {
                self.open_new_query(source)?;
            }
            self.collect_answer(source)?;
        }
        for d in self.queue.poll_due_step(self.step) {
            self.apply(d);
        }
        self.integrate()?;
        Ok(true)
    }

    pub fn run(&mut self, source: &mut dyn DecisionSource) -> Result<()> {
        while self.step(source)? {}
        Ok(())
    }

    pub fn into_result(self) -> TrialResult {
        let collided = self.collision_time.is_some();
        let outcome = match self.outcome {
            Some(o) => o,
            None if collided => TrialOutcome::Collided,
            None => TrialOutcome::TimedOut,
        };
        TrialResult {
            trial_index: self.trial_index,
            seed: self.scene.seed,
            kind: self.config.kind,
            policy: self.config.policy,
            collided,
            collision_time: self.collision_time,
            outcome,
            end_time: self.time(),
            min_clearance: self.min_clearance,
            maneuver_speed: self.scene.maneuver_speed,
            obstacle_speed: self.scene.obstacle.map(|o| o.speed),
            decisions: self.decisions,
            perceived_trace: self.perceived_trace,
            steps: self.steps,
            wall_time: 0.0,
        }
    }
}

fn source_wants_licom(config: &ScenarioConfig) -> bool {
    config.policy == OperatorMode::LatencyAware
}

/// Seed of trial `index` under `master_seed`. Shared by both policies so
/// paired batches see identical scenes.
pub fn trial_seed(master_seed: u64, index: u64) -> u64 {
    derive_seed(master_seed, &[tag::TRIAL, index])
}

/// Runs one trial with the simulated operator of `config.policy`.
pub fn run_trial(config: &ScenarioConfig, seed: u64) -> Result<TrialResult> {
    run_trial_indexed(config, seed, 0, LoopOptions::default())
}

pub fn run_trial_indexed(config: &ScenarioConfig, seed: u64, index: u64, options: LoopOptions) -> Result<TrialResult> {
    let started = std::time::Instant::now();
    let scene = build_scenario(config, seed)?;
    let mut sim = Simulation::new(config.clone(), scene, index, options);
    let mut source = SimulatedOperator::new(config.policy);
    sim.run(&mut source)?;
    let mut result = sim.into_result();
    result.wall_time = started.elapsed().as_secs_f64();
    Ok(result)
}

/// Runs a prepared scene with any decision source.
pub fn run_scene(
    config: &ScenarioConfig,
    scene: Scene,
    source: &mut dyn DecisionSource,
    options: LoopOptions,
) -> Result<TrialResult> {
    let mut sim = Simulation::new(config.clone(), scene, 0, options);
    sim.run(source)?;
    Ok(sim.into_result())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn obstacle_free_run_completes_without_queries() {
        for kind in ScenarioKind::ALL {
            let c = ScenarioConfig::for_kind(kind);
            let scene = build_scenario(&c, 5).unwrap().without_obstacle();
            let r = run_scene(&c, scene.clone(), &mut SimulatedOperator::new(c.policy), LoopOptions::default()).unwrap();
            assert_eq!(r.outcome, TrialOutcome::Completed);
            assert!(!r.collided);
            assert!(r.decisions.is_empty());
            assert!(r.follows_reference_until_first_change(&scene));
        }
    }

    #[test]
    fn trials_are_deterministic() {
        let c = ScenarioConfig::for_kind(ScenarioKind::RightTurn);
        let a = run_trial(&c, 11).unwrap();
        let b = run_trial(&c, 11).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn collision_flag_matches_log() {
        let mut c = ScenarioConfig::for_kind(ScenarioKind::LeftTurn).with_policy(OperatorMode::Baseline);
        c = c.with_latency(0.4);
        for seed in 0..6 {
            let r = run_trial(&c, seed).unwrap();
            assert_eq!(r.collided, r.collision_from_log(&c), "seed {seed}");
        }
    }
}
