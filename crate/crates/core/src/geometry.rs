//! Planar poses, oriented rectangle footprints, ego kinematics and
//! reference-trajectory lookup.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Sedan-sized default footprint: 4.5 m x 2.0 m.
pub const DEFAULT_HALF_LENGTH: f64 = 2.25;
pub const DEFAULT_HALF_WIDTH: f64 = 1.0;

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle(theta: f64) -> f64 {
    let mut a = theta - 2.0 * PI * ((theta + PI) / (2.0 * PI)).floor();
    if a <= -PI {
        a += 2.0 * PI;
    }
    if a > PI {
        a -= 2.0 * PI;
    }
    a
}

/// A pose in SE(2). `theta` is kept in `(-pi, pi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose2 {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Pose2 {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self { x, y, theta: wrap_angle(theta) }
    }

    pub fn origin() -> Self {
        Self::new(0.0, 0.0, 0.0)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.theta.is_finite()
    }

    pub fn distance(&self, other: &Pose2) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn translated(&self, dx: f64, dy: f64) -> Self {
        Self::new(self.x + dx, self.y + dy, self.theta)
    }

    /// Expresses a world point in this pose's frame.
    pub fn to_local(&self, px: f64, py: f64) -> (f64, f64) {
        let (s, c) = self.theta.sin_cos();
        let dx = px - self.x;
        let dy = py - self.y;
        (c * dx + s * dy, -s * dx + c * dy)
    }
}

/// Half extents of a rectangular footprint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extents {
    pub half_length: f64,
    pub half_width: f64,
}

impl Default for Extents {
    fn default() -> Self {
        Self { half_length: DEFAULT_HALF_LENGTH, half_width: DEFAULT_HALF_WIDTH }
    }
}

impl Extents {
    pub fn new(half_length: f64, half_width: f64) -> Result<Self> {
        let e = Self { half_length, half_width };
        e.validate()?;
        Ok(e)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.half_length.is_finite() && self.half_width.is_finite()) {
            return Err(Error::NonFinite("extents"));
        }
        if !(self.half_width > 0.0 && self.half_length >= self.half_width) {
            return Err(Error::InvalidInput(format!(
                "extents must satisfy half_length >= half_width > 0 (got {} x {})",
                self.half_length, self.half_width
            )));
        }
        Ok(())
    }

    /// Radius of the circumscribed circle.
    pub fn circumradius(&self) -> f64 {
        self.half_length.hypot(self.half_width)
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self { half_length: self.half_length * k, half_width: self.half_width * k }
    }

    pub fn at(&self, pose: Pose2) -> Footprint {
        Footprint { center: pose, half_length: self.half_length, half_width: self.half_width }
    }
}

/// Oriented rectangle occupied by a vehicle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Footprint {
    pub center: Pose2,
    pub half_length: f64,
    pub half_width: f64,
}

impl Footprint {
    pub fn new(center: Pose2, half_length: f64, half_width: f64) -> Result<Self> {
        Extents::new(half_length, half_width)?;
        if !center.is_finite() {
            return Err(Error::NonFinite("footprint center"));
        }
        Ok(Self { center, half_length, half_width })
    }

    pub fn extents(&self) -> Extents {
        Extents { half_length: self.half_length, half_width: self.half_width }
    }

    /// Unit vectors along the length and width directions.
    #[inline]
    fn axes(&self) -> ([f64; 2], [f64; 2]) {
        let (s, c) = self.center.theta.sin_cos();
        ([c, s], [-s, c])
    }

    /// Corners in counter-clockwise order starting at front-left.
    pub fn corners(&self) -> [[f64; 2]; 4] {
        let (u, v) = self.axes();
        let (l, w) = (self.half_length, self.half_width);
        let (cx, cy) = (self.center.x, self.center.y);
        [
            [cx + l * u[0] + w * v[0], cy + l * u[1] + w * v[1]],
            [cx - l * u[0] + w * v[0], cy - l * u[1] + w * v[1]],
            [cx - l * u[0] - w * v[0], cy - l * u[1] - w * v[1]],
            [cx + l * u[0] - w * v[0], cy + l * u[1] - w * v[1]],
        ]
    }

    pub fn contains_point(&self, px: f64, py: f64) -> bool {
        let (lx, ly) = self.center.to_local(px, py);
        lx.abs() <= self.half_length && ly.abs() <= self.half_width
    }

    pub fn circumradius(&self) -> f64 {
        self.half_length.hypot(self.half_width)
    }
}

/// True iff the two oriented rectangles overlap or touch.
///
/// Separating-axis test over the two edge normals of each rectangle.
pub fn rect_intersects(a: &Footprint, b: &Footprint) -> bool {
    let dx = b.center.x - a.center.x;
    let dy = b.center.y - a.center.y;
    let reach = a.circumradius() + b.circumradius();
    if dx * dx + dy * dy > reach * reach {
        return false;
    }
    let (au, av) = a.axes();
    let (bu, bv) = b.axes();
    for axis in [au, av, bu, bv] {
        let dist = (dx * axis[0] + dy * axis[1]).abs();
        let ra = a.half_length * (au[0] * axis[0] + au[1] * axis[1]).abs()
            + a.half_width * (av[0] * axis[0] + av[1] * axis[1]).abs();
        let rb = b.half_length * (bu[0] * axis[0] + bu[1] * axis[1]).abs()
            + b.half_width * (bv[0] * axis[0] + bv[1] * axis[1]).abs();
        if dist > ra + rb {
            return false;
        }
    }
    true
}

fn point_segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let ap = [p[0] - a[0], p[1] - a[1]];
    let len2 = ab[0] * ab[0] + ab[1] * ab[1];
    let t = if len2 > 0.0 { ((ap[0] * ab[0] + ap[1] * ab[1]) / len2).clamp(0.0, 1.0) } else { 0.0 };
    (ap[0] - t * ab[0]).hypot(ap[1] - t * ab[1])
}

/// Minimum Euclidean distance between two footprints (0 when they overlap).
pub fn rect_distance(a: &Footprint, b: &Footprint) -> f64 {
    if rect_intersects(a, b) {
        return 0.0;
    }
    let ca = a.corners();
    let cb = b.corners();
    let mut best = f64::INFINITY;
    for (pts, poly) in [(&ca, &cb), (&cb, &ca)] {
        for p in pts.iter() {
            for i in 0..4 {
                best = best.min(point_segment_distance(*p, poly[i], poly[(i + 1) % 4]));
            }
        }
    }
    best
}

/// Ego vehicle state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EgoState {
    pub pose: Pose2,
    pub speed: f64,
    pub time: f64,
}

impl EgoState {
    pub fn new(pose: Pose2, speed: f64, time: f64) -> Self {
        Self { pose, speed, time }
    }
}

/// Observed obstacle state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObstacleState {
    pub id: u32,
    pub pose: Pose2,
    pub velocity: (f64, f64),
    pub extents: Extents,
}

impl ObstacleState {
    pub fn footprint(&self) -> Footprint {
        self.extents.at(self.pose)
    }
}

/// Longitudinal acceleration and path curvature for one integration step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlCommand {
    /// m/s^2, negative when braking.
    pub accel: f64,
    /// 1/m, positive turns left.
    pub curvature: f64,
}

impl ControlCommand {
    pub fn new(accel: f64, curvature: f64) -> Self {
        Self { accel, curvature }
    }

    pub fn coast() -> Self {
        Self::new(0.0, 0.0)
    }

    pub fn brake(deceleration: f64, curvature: f64) -> Self {
        Self::new(-deceleration.abs(), curvature)
    }
}

/// Advances the ego by `dt` under a kinematic single-track model driven by
/// curvature. Motion within a step follows an exact circular arc and the
/// speed ramps linearly; braking stops exactly at zero speed.
pub fn step_ego(state: &EgoState, command: &ControlCommand, dt: f64) -> Result<EgoState> {
    if !(command.accel.is_finite() && command.curvature.is_finite()) {
        return Err(Error::NonFinite("control command"));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidInput(format!("dt must be positive, got {dt}")));
    }
    let v0 = state.speed.max(0.0);
    let a = command.accel;
    let (v1, ds) = if a < 0.0 && v0 + a * dt <= 0.0 {
        (0.0, v0 * v0 / (2.0 * -a))
    } else {
        let v1 = v0 + a * dt;
        (v1, 0.5 * (v0 + v1) * dt)
    };
    let th0 = state.pose.theta;
    let dth = command.curvature * ds;
    let (x, y) = if dth.abs() < 1e-9 {
        let mid = th0 + 0.5 * dth;
        (state.pose.x + ds * mid.cos(), state.pose.y + ds * mid.sin())
    } else {
        let k = command.curvature;
        let th1 = th0 + dth;
        (state.pose.x + (th1.sin() - th0.sin()) / k, state.pose.y + (th0.cos() - th1.cos()) / k)
    };
    Ok(EgoState { pose: Pose2::new(x, y, th0 + dth), speed: v1, time: state.time + dt })
}

/// One sample of a reference trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub time: f64,
    pub pose: Pose2,
    pub speed: f64,
    /// Distance travelled from the first sample.
    pub arc_length: f64,
    /// Curvature commanded from this sample to the next.
    pub curvature: f64,
}

/// Uniformly sampled reference trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    dt: f64,
    samples: Vec<TrajectorySample>,
}

impl Trajectory {
    /// Builds a trajectory from samples; times must be strictly increasing
    /// with uniform spacing `dt`.
    pub fn new(dt: f64, samples: Vec<TrajectorySample>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidInput("trajectory needs at least one sample".into()));
        }
        if !(dt > 0.0) {
            return Err(Error::InvalidInput("trajectory step must be positive".into()));
        }
        for w in samples.windows(2) {
            let gap = w[1].time - w[0].time;
            if !(gap > 0.0) || (gap - dt).abs() > 1e-6 {
                return Err(Error::InvalidInput(format!("non-uniform trajectory spacing {gap}")));
            }
        }
        Ok(Self { dt, samples })
    }

    /// Rolls `step_ego` forward from `start` through a schedule of commands,
    /// one per step, recording every state.
    pub fn rollout(start: EgoState, commands: &[ControlCommand], dt: f64) -> Result<Self> {
        let mut samples = Vec::with_capacity(commands.len() + 1);
        let mut state = start;
        let mut arc = 0.0;
        for (i, cmd) in commands.iter().enumerate() {
            samples.push(TrajectorySample {
                time: start.time + i as f64 * dt,
                pose: state.pose,
                speed: state.speed,
                arc_length: arc,
                curvature: cmd.curvature,
            });
            let next = step_ego(&state, cmd, dt)?;
            arc += ds_between(&state, &next, cmd);
            state = EgoState { time: start.time + (i + 1) as f64 * dt, ..next };
        }
        samples.push(TrajectorySample {
            time: start.time + commands.len() as f64 * dt,
            pose: state.pose,
            speed: state.speed,
            arc_length: arc,
            curvature: commands.last().map_or(0.0, |c| c.curvature),
        });
        Self::new(dt, samples)
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn samples(&self) -> &[TrajectorySample] {
        &self.samples
    }

    pub fn start_time(&self) -> f64 {
        self.samples[0].time
    }

    pub fn end_time(&self) -> f64 {
        self.samples[self.samples.len() - 1].time
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn total_length(&self) -> f64 {
        self.samples[self.samples.len() - 1].arc_length
    }

    pub fn sample(&self, index: usize) -> &TrajectorySample {
        &self.samples[index.min(self.samples.len() - 1)]
    }

    /// Pose and speed at time `t`, clamped to the trajectory's time range.
    pub fn pose_clamped(&self, t: f64) -> (Pose2, f64) {
        let t = t.clamp(self.start_time(), self.end_time());
        self.pose_at(t).expect("clamped time is in range")
    }

    /// Linear interpolation between bracketing samples; heading follows the
    /// shorter arc. Times outside the trajectory are an error.
    pub fn pose_at(&self, t: f64) -> Result<(Pose2, f64)> {
        let (start, end) = (self.start_time(), self.end_time());
        let tol = 1e-9 * self.dt.max(1.0);
        if !t.is_finite() || t < start - tol || t > end + tol {
            return Err(Error::OutOfRange { t, start, end });
        }
        let u = ((t - start) / self.dt).max(0.0);
        let i = (u.floor() as usize).min(self.samples.len() - 1);
        let frac = u - i as f64;
        if i + 1 >= self.samples.len() || frac <= 1e-12 {
            let s = &self.samples[i];
            return Ok((s.pose, s.speed));
        }
        let (a, b) = (&self.samples[i], &self.samples[i + 1]);
        Ok(interpolate(a, b, frac))
    }

    /// Arc length of the closest point on the trajectory polyline.
    pub fn project(&self, px: f64, py: f64) -> f64 {
        let mut best = (f64::INFINITY, 0.0);
        for w in self.samples.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            let ab = [b.pose.x - a.pose.x, b.pose.y - a.pose.y];
            let len2 = ab[0] * ab[0] + ab[1] * ab[1];
            let t = if len2 > 0.0 {
                (((px - a.pose.x) * ab[0] + (py - a.pose.y) * ab[1]) / len2).clamp(0.0, 1.0)
            } else {
                0.0
            };
            let qx = a.pose.x + t * ab[0];
            let qy = a.pose.y + t * ab[1];
            let d = (px - qx).hypot(py - qy);
            if d < best.0 {
                best = (d, a.arc_length + t * (b.arc_length - a.arc_length));
            }
        }
        if self.samples.len() == 1 {
            return 0.0;
        }
        best.1
    }

    fn index_at_arc(&self, s: f64) -> usize {
        let i = self.samples.partition_point(|p| p.arc_length <= s);
        i.saturating_sub(1).min(self.samples.len() - 1)
    }

    /// Pose on the path at arc length `s` (clamped to the path).
    pub fn pose_at_arc_length(&self, s: f64) -> Pose2 {
        let i = self.index_at_arc(s);
        if i + 1 >= self.samples.len() {
            return self.samples[i].pose;
        }
        let (a, b) = (&self.samples[i], &self.samples[i + 1]);
        let span = b.arc_length - a.arc_length;
        let frac = if span > 0.0 { ((s - a.arc_length) / span).clamp(0.0, 1.0) } else { 0.0 };
        interpolate(a, b, frac).0
    }

    /// Path curvature at arc length `s`.
    pub fn curvature_at_arc_length(&self, s: f64) -> f64 {
        self.samples[self.index_at_arc(s)].curvature
    }
}

fn interpolate(a: &TrajectorySample, b: &TrajectorySample, frac: f64) -> (Pose2, f64) {
    let dth = wrap_angle(b.pose.theta - a.pose.theta);
    (
        Pose2::new(
            a.pose.x + frac * (b.pose.x - a.pose.x),
            a.pose.y + frac * (b.pose.y - a.pose.y),
            a.pose.theta + frac * dth,
        ),
        a.speed + frac * (b.speed - a.speed),
    )
}

fn ds_between(from: &EgoState, to: &EgoState, cmd: &ControlCommand) -> f64 {
    let a = cmd.accel;
    let v0 = from.speed.max(0.0);
    if to.speed == 0.0 && a < 0.0 {
        v0 * v0 / (2.0 * -a)
    } else {
        0.5 * (v0 + to.speed) * (to.time - from.time)
    }
}

/// Path-tracking command toward a reference path at the ego's current
/// progress: curvature feedforward plus heading and lateral-error feedback.
pub fn track_path(reference: &Trajectory, state: &EgoState, arc_length: f64, accel: f64) -> ControlCommand {
    const K_LATERAL: f64 = 0.05;
    const K_HEADING: f64 = 0.5;
    let target = reference.pose_at_arc_length(arc_length);
    let (_, lateral) = target.to_local(state.pose.x, state.pose.y);
    let heading_err = wrap_angle(state.pose.theta - target.theta);
    let kappa = reference.curvature_at_arc_length(arc_length) - K_LATERAL * lateral - K_HEADING * heading_err;
    ControlCommand::new(accel, kappa)
}
