//! Scene construction: the ego's reference trajectory for each conflict
//! layout and the obstacle's lane and timing.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use super::config::{ScenarioConfig, ScenarioKind};
use crate::geometry::{ControlCommand, EgoState, Extents, ObstacleState, Pose2, Trajectory};
use crate::rng::{stream, tag};
use crate::Result;

/// A constant-velocity obstacle that appears at `spawn_time`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObstacleScript {
    pub id: u32,
    pub spawn_time: f64,
    pub spawn_pose: Pose2,
    pub speed: f64,
    pub extents: Extents,
}

impl ObstacleScript {
    pub fn velocity(&self) -> (f64, f64) {
        let (s, c) = self.spawn_pose.theta.sin_cos();
        (self.speed * c, self.speed * s)
    }

    /// True state at `t`, or `None` before the obstacle appears.
    pub fn state_at(&self, t: f64) -> Option<ObstacleState> {
        if t + 1e-9 < self.spawn_time {
            return None;
        }
        let dt = t - self.spawn_time;
        let (vx, vy) = self.velocity();
        Some(ObstacleState {
            id: self.id,
            pose: self.spawn_pose.translated(vx * dt, vy * dt),
            velocity: (vx, vy),
            extents: self.extents,
        })
    }
}

/// Initial scene of one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub kind: ScenarioKind,
    pub seed: u64,
    pub ego_start: EgoState,
    pub reference: Trajectory,
    pub obstacle: Option<ObstacleScript>,
    /// Ego speed through the maneuver, m/s.
    pub maneuver_speed: f64,
    /// Where the ego's path meets the obstacle's lane.
    pub conflict_point: (f64, f64),
    /// When the reference reaches the conflict point, seconds.
    pub conflict_time: f64,
    /// Obstacle position offset along its lane at spawn, meters.
    pub spawn_offset: f64,
}

impl Scene {
    pub fn without_obstacle(mut self) -> Self {
        self.obstacle = None;
        self
    }
}

/// Per-step commands of the obstacle-free reference: a straight approach
/// with constant acceleration that covers exactly `approach_distance` and
/// enters the maneuver at `v_m`, the maneuver at constant speed, then a
/// straight segment.
pub fn reference_commands(config: &ScenarioConfig, v_m: f64) -> (f64, Vec<ControlCommand>) {
    let dt = config.dt;
    let ph = config.phases;
    let v0 = 2.0 * config.approach_distance / ph.straight - v_m;
    let accel = (v_m - v0) / ph.straight;
    let n_straight = (ph.straight / dt).round() as usize;
    let n_maneuver = (ph.maneuver / dt).round() as usize;
    let n_post = (ph.post / dt).round() as usize;
    let mut cmds = Vec::with_capacity(n_straight + n_maneuver + n_post);
    cmds.extend(std::iter::repeat_n(ControlCommand::new(accel, 0.0), n_straight));
    let arc = v_m * ph.maneuver;
    for i in 0..n_maneuver {
        let kappa = match config.kind {
            ScenarioKind::RightTurn => -FRAC_PI_2 / arc,
            ScenarioKind::LeftTurn => FRAC_PI_2 / arc,
            ScenarioKind::Merge => {
                // Heading follows theta_max * sin(pi t / T); its integral moves
                // the ego one lane to the left.
                let t_mid = (i as f64 + 0.5) * dt;
                let theta_max = merge_peak_heading(config.lane_width, v_m, ph.maneuver);
                theta_max * PI / ph.maneuver * (PI * t_mid / ph.maneuver).cos() / v_m
            }
        };
        cmds.push(ControlCommand::new(0.0, kappa));
    }
    cmds.extend(std::iter::repeat_n(ControlCommand::new(0.0, 0.0), n_post));
    (v0, cmds)
}

/// Peak heading of the lane change such that the lateral displacement
/// `v int sin(theta)` equals `lane_width`.
fn merge_peak_heading(lane_width: f64, v: f64, duration: f64) -> f64 {
    // Solve v * T * J0-like integral numerically: lateral(theta_max) is
    // monotone for theta_max < pi / 2, so bisection suffices.
    let lateral = |a: f64| -> f64 {
        let n = 400;
        let h = duration / n as f64;
        (0..n).map(|i| (a * (PI * (i as f64 + 0.5) * h / duration).sin()).sin() * v * h).sum()
    };
    let (mut lo, mut hi) = (0.0, FRAC_PI_2);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if lateral(mid) < lane_width {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Obstacle-free reference trajectory for maneuver speed `v_m`.
pub fn reference_trajectory(config: &ScenarioConfig, v_m: f64) -> Result<Trajectory> {
    let (v0, cmds) = reference_commands(config, v_m);
    Trajectory::rollout(EgoState::new(Pose2::origin(), v0, 0.0), &cmds, config.dt)
}

/// First reference sample at which `pred` holds.
fn first_time(reference: &Trajectory, pred: impl Fn(&Pose2) -> bool) -> (f64, Pose2) {
    let s = reference
        .samples()
        .iter()
        .find(|s| pred(&s.pose))
        .unwrap_or_else(|| reference.sample(reference.len() - 1));
    (s.time, s.pose)
}

/// Builds the scene for `seed`. Identical inputs give identical scenes.
pub fn build_scenario(config: &ScenarioConfig, seed: u64) -> Result<Scene> {
    config.validate()?;
    let mut rng = stream(seed, &[tag::SCENE]);
    let v_m = config.maneuver_speed.sample(&mut rng);
    let v_o = config.obstacle_speed.sample(&mut rng) + if config.obstacle_speed_relative { v_m } else { 0.0 };
    let jitter = if config.spawn_jitter > 0.0 {
        rand::Rng::random_range(&mut rng, -config.spawn_jitter..=config.spawn_jitter)
    } else {
        0.0
    };
    let reference = reference_trajectory(config, v_m)?;
    let entry = config.phases.straight;
    let w = config.lane_width;
    let entry_x = config.approach_distance;

    // Conflict point, obstacle heading along its lane.
    let (conflict_time, conflict_point, heading) = match config.kind {
        ScenarioKind::Merge => {
            let (t, p) = first_time(&reference, |p| p.y >= 0.5 * w);
            (t, (p.x, w), 0.0)
        }
        ScenarioKind::RightTurn => {
            let radius = v_m * config.phases.maneuver / FRAC_PI_2;
            (entry + config.phases.maneuver, (entry_x + radius, -radius), -FRAC_PI_2)
        }
        ScenarioKind::LeftTurn => {
            let (t, p) = first_time(&reference, |p| p.y >= w);
            (t, (p.x, w), PI)
        }
    };

    let obstacle = if v_o > 0.0 {
        let travel = config.spawn_distance;
        let spawn_time = conflict_time - travel / v_o;
        let back = travel - jitter;
        let (s, c) = f64::sin_cos(heading);
        Some(ObstacleScript {
            id: 1,
            spawn_time,
            spawn_pose: Pose2::new(conflict_point.0 - back * c, conflict_point.1 - back * s, heading),
            speed: v_o,
            extents: config.obstacle_extents,
        })
    } else {
        None
    };

    Ok(Scene {
        kind: config.kind,
        seed,
        ego_start: EgoState::new(reference.sample(0).pose, reference.sample(0).speed, 0.0),
        reference,
        obstacle,
        maneuver_speed: v_m,
        conflict_point,
        conflict_time,
        spawn_offset: jitter,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn scenes_are_deterministic() {
        for kind in ScenarioKind::ALL {
            let c = ScenarioConfig::for_kind(kind);
            assert_eq!(build_scenario(&c, 42).unwrap(), build_scenario(&c, 42).unwrap());
            assert_ne!(build_scenario(&c, 42).unwrap(), build_scenario(&c, 43).unwrap());
        }
    }

    #[test]
    fn approach_covers_ninety_meters() {
        for kind in ScenarioKind::ALL {
            let c = ScenarioConfig::for_kind(kind);
            let s = build_scenario(&c, 7).unwrap();
            let entry = s.reference.sample(500);
            assert_abs_diff_eq!(entry.time, 5.0, epsilon = 1e-9);
            assert_abs_diff_eq!(entry.arc_length, 90.0, epsilon = 1e-6);
            assert_abs_diff_eq!(entry.pose.x, 90.0, epsilon = 1e-6);
            assert_abs_diff_eq!(entry.speed, s.maneuver_speed, epsilon = 1e-9);
            assert_abs_diff_eq!(s.reference.end_time(), 9.5, epsilon = 1e-9);
        }
    }

    #[test]
    fn maneuvers_end_in_the_right_lane() {
        let c = ScenarioConfig::for_kind(ScenarioKind::Merge);
        let s = build_scenario(&c, 1).unwrap();
        let end = s.reference.sample(750).pose;
        assert_abs_diff_eq!(end.y, 3.5, epsilon = 0.01);
        assert_abs_diff_eq!(end.theta, 0.0, epsilon = 1e-3);

        let c = ScenarioConfig::for_kind(ScenarioKind::RightTurn);
        let s = build_scenario(&c, 1).unwrap();
        let end = s.reference.sample(750).pose;
        assert_abs_diff_eq!(end.theta, -FRAC_PI_2, epsilon = 1e-9);
        assert_abs_diff_eq!(end.x, s.conflict_point.0, epsilon = 1e-6);
        assert_abs_diff_eq!(end.y, s.conflict_point.1, epsilon = 1e-6);

        let c = ScenarioConfig::for_kind(ScenarioKind::LeftTurn);
        let s = build_scenario(&c, 1).unwrap();
        assert_abs_diff_eq!(s.reference.sample(750).pose.theta, FRAC_PI_2, epsilon = 1e-9);
    }

    #[test]
    fn obstacle_reaches_conflict_point_on_schedule() {
        for kind in ScenarioKind::ALL {
            let mut c = ScenarioConfig::for_kind(kind);
            c.spawn_jitter = 0.0;
            let s = build_scenario(&c, 3).unwrap();
            let o = s.obstacle.unwrap();
            assert!(o.state_at(o.spawn_time - 0.01).is_none());
            let at = o.state_at(s.conflict_time).unwrap().pose;
            assert_abs_diff_eq!(at.x, s.conflict_point.0, epsilon = 1e-9);
            assert_abs_diff_eq!(at.y, s.conflict_point.1, epsilon = 1e-9);
            let spawn = o.state_at(o.spawn_time).unwrap().pose;
            assert_abs_diff_eq!(
                (spawn.x - at.x).hypot(spawn.y - at.y),
                c.spawn_distance,
                epsilon = 1e-9
            );
        }
    }
}
