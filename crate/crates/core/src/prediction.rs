//! Obstacle motion beliefs: Gaussian mixtures over `(x, y, theta)`, the
//! constant-velocity transition model and an EKF tracker.

use nalgebra::{Matrix3, Matrix3x4, Matrix4, SymmetricEigen, Vector3, Vector4};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::geometry::{wrap_angle, ObstacleState, Pose2};
use crate::{Error, Result};

/// Largest diagonal jitter, relative to the largest variance, tried before a
/// covariance is declared singular.
pub const MAX_JITTER: f64 = 1e-9;
/// Upper bound on mixture size.
pub const MAX_MODES: usize = 8;

/// One weighted Gaussian component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianMode {
    pub mean: Pose2,
    pub covariance: Matrix3<f64>,
    pub weight: f64,
}

impl GaussianMode {
    pub fn new(mean: Pose2, covariance: Matrix3<f64>, weight: f64) -> Self {
        Self { mean, covariance, weight }
    }

    /// Factor `L` with `L L^T = covariance`, built from the symmetric
    /// eigendecomposition so that rank-deficient covariances are handled
    /// exactly (zero eigenvalues give zero columns).
    pub fn sqrt_factor(&self) -> Matrix3<f64> {
        psd_sqrt(&self.covariance)
    }

    /// Standard deviation along the major axis of the position block.
    pub fn position_sigma_max(&self) -> f64 {
        let c = &self.covariance;
        let (a, b, d) = (c[(0, 0)], c[(0, 1)], c[(1, 1)]);
        let half_tr = 0.5 * (a + d);
        let disc = (0.25 * (a - d) * (a - d) + b * b).sqrt();
        (half_tr + disc).max(0.0).sqrt()
    }
}

pub(crate) fn psd_sqrt(cov: &Matrix3<f64>) -> Matrix3<f64> {
    if cov.iter().all(|v| *v == 0.0) {
        return Matrix3::zeros();
    }
    let sym = 0.5 * (cov + cov.transpose());
    let eig = SymmetricEigen::new(sym);
    let mut factor = eig.eigenvectors;
    for (j, lambda) in eig.eigenvalues.iter().enumerate() {
        let s = lambda.max(0.0).sqrt();
        for i in 0..3 {
            factor[(i, j)] *= s;
        }
    }
    factor
}

/// Weighted Gaussian mixture over obstacle pose at a reference time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureBelief {
    pub modes: Vec<GaussianMode>,
    pub time: f64,
}

impl MixtureBelief {
    pub fn new(modes: Vec<GaussianMode>, time: f64) -> Result<Self> {
        let b = Self { modes, time };
        b.validate()?;
        Ok(b)
    }

    pub fn single(mean: Pose2, covariance: Matrix3<f64>, time: f64) -> Self {
        Self { modes: vec![GaussianMode::new(mean, covariance, 1.0)], time }
    }

    pub fn validate(&self) -> Result<()> {
        if self.modes.is_empty() || self.modes.len() > MAX_MODES {
            return Err(Error::InvalidInput(format!(
                "mixture must have 1..={MAX_MODES} modes, got {}",
                self.modes.len()
            )));
        }
        let mut total = 0.0;
        for m in &self.modes {
            if !m.mean.is_finite() || m.covariance.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("mixture mode"));
            }
            if !(0.0..=1.0).contains(&m.weight) {
                return Err(Error::InvalidInput(format!("mode weight {} outside [0, 1]", m.weight)));
            }
            if (m.covariance - m.covariance.transpose()).abs().max() > 1e-9 {
                return Err(Error::InvalidInput("covariance is not symmetric".into()));
            }
            total += m.weight;
        }
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidInput(format!("mode weights sum to {total}")));
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.modes.iter().all(|m| m.mean.is_finite() && m.covariance.iter().all(|v| v.is_finite()))
    }

    /// Applies the transition model for `dt` seconds. Heading is carried
    /// unchanged; the covariance grows by `dt * Q` (identity Jacobian).
    pub fn propagate(&self, dt: f64, model: &MotionModel) -> Result<Self> {
        if !(dt >= 0.0) || !dt.is_finite() {
            return Err(Error::InvalidInput(format!("propagation step must be >= 0, got {dt}")));
        }
        if dt == 0.0 {
            return Ok(self.clone());
        }
        let (vx, vy) = model.velocity;
        let modes = self
            .modes
            .iter()
            .map(|m| GaussianMode {
                mean: Pose2::new(m.mean.x + vx * dt, m.mean.y + vy * dt, m.mean.theta),
                covariance: m.covariance + model.process_noise * dt,
                weight: m.weight,
            })
            .collect();
        Ok(Self { modes, time: self.time + dt })
    }

    /// Draws one pose. Builds a sampler on every call; use [`MixtureSampler`]
    /// when drawing many.
    pub fn sample_pose<R: Rng + ?Sized>(&self, rng: &mut R) -> Pose2 {
        MixtureSampler::new(self).sample(rng)
    }

    /// Mixture density at `pose`, heading differences wrapped.
    pub fn density(&self, pose: &Pose2) -> Result<f64> {
        let mut total = 0.0;
        for m in &self.modes {
            if m.weight == 0.0 {
                continue;
            }
            let chol = cholesky_with_jitter(&m.covariance)?;
            let d = Vector3::new(pose.x - m.mean.x, pose.y - m.mean.y, wrap_angle(pose.theta - m.mean.theta));
            let z = chol.l().solve_lower_triangular(&d).ok_or(Error::SingularCovariance)?;
            let log_det = 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
            let norm = (2.0 * std::f64::consts::PI).powf(-1.5) * (-0.5 * log_det).exp();
            total += m.weight * norm * (-0.5 * z.norm_squared()).exp();
        }
        Ok(total)
    }
}

fn cholesky_with_jitter(cov: &Matrix3<f64>) -> Result<nalgebra::Cholesky<f64, nalgebra::U3>> {
    let sym = 0.5 * (cov + cov.transpose());
    if let Some(c) = sym.cholesky() {
        return Ok(c);
    }
    // Jitter is relative to the largest variance; an all-zero covariance
    // has no density at all.
    let scale = sym.diagonal().amax();
    if !(scale > 0.0) {
        return Err(Error::SingularCovariance);
    }
    let mut jitter = 1e-12;
    while jitter <= MAX_JITTER {
        if let Some(c) = (sym + Matrix3::identity() * (jitter * scale)).cholesky() {
            return Ok(c);
        }
        jitter *= 10.0;
    }
    Err(Error::SingularCovariance)
}

/// Precomputed per-mode factors for repeated draws from one belief.
#[derive(Debug, Clone)]
pub struct MixtureSampler {
    cumulative: Vec<f64>,
    means: Vec<Pose2>,
    factors: Vec<Matrix3<f64>>,
}

impl MixtureSampler {
    pub fn new(belief: &MixtureBelief) -> Self {
        let mut acc = 0.0;
        let cumulative = belief
            .modes
            .iter()
            .map(|m| {
                acc += m.weight;
                acc
            })
            .collect();
        Self {
            cumulative,
            means: belief.modes.iter().map(|m| m.mean).collect(),
            factors: belief.modes.iter().map(GaussianMode::sqrt_factor).collect(),
        }
    }

    fn pick<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        if self.means.len() == 1 {
            return 0;
        }
        let u: f64 = rng.random::<f64>() * self.cumulative[self.cumulative.len() - 1];
        self.cumulative.iter().position(|c| u < *c).unwrap_or(self.cumulative.len() - 1)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Pose2 {
        let j = self.pick(rng);
        gaussian_draw(&self.means[j], &self.factors[j], rng)
    }
}

/// `mean + L z` with `z` standard normal; heading wrapped.
#[inline]
pub(crate) fn gaussian_draw<R: Rng + ?Sized>(mean: &Pose2, factor: &Matrix3<f64>, rng: &mut R) -> Pose2 {
    let z = Vector3::new(
        rng.sample::<f64, _>(StandardNormal),
        rng.sample::<f64, _>(StandardNormal),
        rng.sample::<f64, _>(StandardNormal),
    );
    let d = factor * z;
    Pose2::new(mean.x + d[0], mean.y + d[1], mean.theta + d[2])
}

/// Constant-velocity transition model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotionModel {
    pub velocity: (f64, f64),
    /// Covariance growth per second of propagation.
    pub process_noise: Matrix3<f64>,
}

impl MotionModel {
    pub fn default_process_noise() -> Matrix3<f64> {
        Matrix3::from_diagonal(&Vector3::new(0.15, 0.15, 0.01))
    }

    pub fn constant_velocity(vx: f64, vy: f64) -> Self {
        Self { velocity: (vx, vy), process_noise: Self::default_process_noise() }
    }

    pub fn with_noise(mut self, q: Matrix3<f64>) -> Self {
        self.process_noise = q;
        self
    }

    pub fn speed(&self) -> f64 {
        self.velocity.0.hypot(self.velocity.1)
    }
}

/// A tracked obstacle as the planner sees it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObstacleTrack {
    pub observed: ObstacleState,
    pub belief: MixtureBelief,
    pub motion: MotionModel,
}

/// Noise settings of the tracker.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EkfConfig {
    /// Variance growth per second for `(x, y, theta, v)`.
    pub process_noise: [f64; 4],
    /// Observation noise variances for `(x, y, theta)`.
    pub measurement_noise: [f64; 3],
    /// Initial speed variance.
    pub initial_speed_variance: f64,
    /// Covariance growth handed to predictions built from the track.
    pub prediction_noise: [f64; 3],
}

impl Default for EkfConfig {
    fn default() -> Self {
        Self {
            process_noise: [0.05, 0.05, 0.01, 0.5],
            measurement_noise: [0.01, 0.01, 1e-4],
            initial_speed_variance: 4.0,
            prediction_noise: [0.15, 0.15, 0.01],
        }
    }
}

/// Extended Kalman filter over `(x, y, theta, v)` with a unicycle motion
/// model and direct pose observations.
#[derive(Debug, Clone, PartialEq)]
pub struct EkfTracker {
    pub state: Vector4<f64>,
    pub covariance: Matrix4<f64>,
    pub time: f64,
    pub config: EkfConfig,
    pub id: u32,
    pub extents: crate::geometry::Extents,
}

impl EkfTracker {
    /// Starts a track from a first observation; speed is taken from the
    /// observed velocity.
    pub fn initialize(observation: &ObstacleState, time: f64, config: EkfConfig) -> Self {
        let p = observation.pose;
        let speed = observation.velocity.0.hypot(observation.velocity.1);
        let r = config.measurement_noise;
        Self {
            state: Vector4::new(p.x, p.y, p.theta, speed),
            covariance: Matrix4::from_diagonal(&Vector4::new(r[0], r[1], r[2], config.initial_speed_variance)),
            time,
            config,
            id: observation.id,
            extents: observation.extents,
        }
    }

    pub fn predict(&mut self, dt: f64) -> Result<()> {
        if !(dt > 0.0) {
            return Err(Error::InvalidInput(format!("tracker step must be positive, got {dt}")));
        }
        let (x, y, th, v) = (self.state[0], self.state[1], self.state[2], self.state[3]);
        let (s, c) = th.sin_cos();
        self.state = Vector4::new(x + v * c * dt, y + v * s * dt, th, v);
        let f = Matrix4::new(
            1.0, 0.0, -v * s * dt, c * dt, //
            0.0, 1.0, v * c * dt, s * dt, //
            0.0, 0.0, 1.0, 0.0, //
            0.0, 0.0, 0.0, 1.0,
        );
        let q = Matrix4::from_diagonal(&Vector4::from(self.config.process_noise)) * dt;
        self.covariance = f * self.covariance * f.transpose() + q;
        self.time += dt;
        Ok(())
    }

    pub fn update(&mut self, observation: &Pose2) -> Result<()> {
        let h = Matrix3x4::new(
            1.0, 0.0, 0.0, 0.0, //
            0.0, 1.0, 0.0, 0.0, //
            0.0, 0.0, 1.0, 0.0,
        );
        let r = Matrix3::from_diagonal(&Vector3::from(self.config.measurement_noise));
        let innovation = Vector3::new(
            observation.x - self.state[0],
            observation.y - self.state[1],
            wrap_angle(observation.theta - self.state[2]),
        );
        let s = h * self.covariance * h.transpose() + r;
        let s_inv = s.try_inverse().ok_or(Error::SingularCovariance)?;
        let k = self.covariance * h.transpose() * s_inv;
        self.state += k * innovation;
        self.state[2] = wrap_angle(self.state[2]);
        // Joseph form keeps the covariance symmetric PSD.
        let i_kh = Matrix4::identity() - k * h;
        let p = i_kh * self.covariance * i_kh.transpose() + k * r * k.transpose();
        self.covariance = 0.5 * (p + p.transpose());
        Ok(())
    }

    /// Predict by `dt` then correct with `observation`.
    pub fn step(&mut self, observation: &ObstacleState, dt: f64) -> Result<MixtureBelief> {
        self.predict(dt)?;
        self.update(&observation.pose)?;
        Ok(self.belief())
    }

    pub fn pose(&self) -> Pose2 {
        Pose2::new(self.state[0], self.state[1], self.state[2])
    }

    pub fn belief(&self) -> MixtureBelief {
        MixtureBelief::single(self.pose(), self.covariance.fixed_view::<3, 3>(0, 0).into_owned(), self.time)
    }

    pub fn motion_model(&self) -> MotionModel {
        let (s, c) = self.state[2].sin_cos();
        let v = self.state[3];
        MotionModel {
            velocity: (v * c, v * s),
            process_noise: Matrix3::from_diagonal(&Vector3::from(self.config.prediction_noise)),
        }
    }

    pub fn track(&self) -> ObstacleTrack {
        let motion = self.motion_model();
        ObstacleTrack {
            observed: ObstacleState { id: self.id, pose: self.pose(), velocity: motion.velocity, extents: self.extents },
            belief: self.belief(),
            motion,
        }
    }
}

/// One predict/update cycle starting from a fresh track at `prev`.
pub fn ekf_track(
    prev: &ObstacleState,
    observation: &ObstacleState,
    dt: f64,
    config: EkfConfig,
) -> Result<MixtureBelief> {
    let mut tracker = EkfTracker::initialize(prev, 0.0, config);
    tracker.step(observation, dt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use crate::geometry::Extents;
    use crate::rng::stream;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn diag(a: f64, b: f64, c: f64) -> Matrix3<f64> {
        Matrix3::from_diagonal(&Vector3::new(a, b, c))
    }

    fn two_modes(w0: f64) -> MixtureBelief {
        MixtureBelief::new(
            vec![
                GaussianMode::new(Pose2::new(0.0, 0.0, 0.0), diag(0.25, 0.25, 0.01), w0),
                GaussianMode::new(Pose2::new(3.0, 1.0, 0.5), diag(0.36, 0.16, 0.01), 1.0 - w0),
            ],
            0.0,
        )
        .unwrap()
    }

    #[test]
    fn zero_step_is_identity() {
        let b = two_modes(0.4);
        assert_eq!(b.propagate(0.0, &MotionModel::constant_velocity(3.0, 1.0)).unwrap(), b);
    }

    #[test]
    fn negative_step_rejected() {
        let b = two_modes(0.4);
        assert!(b.propagate(-0.1, &MotionModel::constant_velocity(0.0, 0.0)).is_err());
    }

    #[test]
    fn noiseless_drift() {
        let b = MixtureBelief::single(Pose2::origin(), diag(0.3, 0.2, 0.01), 0.0);
        let m = MotionModel::constant_velocity(5.0, 0.0).with_noise(Matrix3::zeros());
        let p = b.propagate(1.0, &m).unwrap();
        assert_eq!(p.modes[0].mean, Pose2::new(5.0, 0.0, 0.0));
        assert_eq!(p.modes[0].covariance, b.modes[0].covariance);
    }

    #[test]
    fn covariance_growth_matches_hand_evaluation() {
        let b = MixtureBelief::single(Pose2::origin(), diag(0.1, 0.1, 0.01), 0.0);
        let m = MotionModel::constant_velocity(1.0, 0.0).with_noise(diag(0.2, 0.2, 0.02));
        let p = b.propagate(0.5, &m).unwrap();
        // F = I: 0.1 + 0.5 * 0.2 = 0.2, 0.01 + 0.5 * 0.02 = 0.02.
        let expected = diag(0.2, 0.2, 0.02);
        assert!((p.modes[0].covariance - expected).abs().max() < 1e-15);
    }

    #[test]
    fn zero_covariance_samples_the_mean() {
        let b = MixtureBelief::single(Pose2::new(1.0, -2.0, 0.3), Matrix3::zeros(), 0.0);
        let mut rng = stream(7, &[1]);
        for _ in 0..100 {
            assert_eq!(b.sample_pose(&mut rng), Pose2::new(1.0, -2.0, 0.3));
        }
    }

    #[test]
    fn degenerate_weights_pick_one_mode() {
        let b = MixtureBelief::new(
            vec![
                GaussianMode::new(Pose2::new(0.0, 0.0, 0.0), Matrix3::zeros(), 1.0),
                GaussianMode::new(Pose2::new(50.0, 0.0, 0.0), Matrix3::zeros(), 0.0),
            ],
            0.0,
        )
        .unwrap();
        let s = MixtureSampler::new(&b);
        let mut rng = stream(8, &[]);
        assert!((0..1000).all(|_| s.sample(&mut rng).x == 0.0));
    }

    #[test]
    fn mode_frequencies_follow_weights() {
        let b = MixtureBelief::new(
            vec![
                GaussianMode::new(Pose2::new(-100.0, 0.0, 0.0), diag(1.0, 1.0, 0.01), 0.3),
                GaussianMode::new(Pose2::new(100.0, 0.0, 0.0), diag(1.0, 1.0, 0.01), 0.7),
            ],
            0.0,
        )
        .unwrap();
        let s = MixtureSampler::new(&b);
        let mut rng = stream(9, &[]);
        let n = 100_000;
        let first = (0..n).filter(|_| s.sample(&mut rng).x < 0.0).count();
        assert!((first as f64 / n as f64 - 0.3).abs() < 0.01);
    }

    #[test]
    fn density_at_standard_normal_mean() {
        let b = MixtureBelief::single(Pose2::origin(), Matrix3::identity(), 0.0);
        let d = b.density(&Pose2::origin()).unwrap();
        assert_abs_diff_eq!(d, (2.0 * std::f64::consts::PI).powf(-1.5), epsilon = 1e-12);
    }

    #[test]
    fn identical_modes_collapse() {
        let m = GaussianMode::new(Pose2::new(1.0, 2.0, 0.1), diag(0.5, 0.3, 0.02), 0.5);
        let pair = MixtureBelief::new(vec![m.clone(), m.clone()], 0.0).unwrap();
        let one = MixtureBelief::single(m.mean, m.covariance, 0.0);
        let q = Pose2::new(1.3, 1.8, 0.0);
        assert_abs_diff_eq!(pair.density(&q).unwrap(), one.density(&q).unwrap(), epsilon = 1e-15);
    }

    #[test]
    fn singular_density_rejected() {
        let b = MixtureBelief::single(Pose2::origin(), Matrix3::zeros(), 0.0);
        assert!(matches!(b.density(&Pose2::origin()), Err(Error::SingularCovariance)));
    }

    #[test]
    fn density_matches_histogram() {
        let b = two_modes(0.45);
        let s = MixtureSampler::new(&b);
        let mut rng = stream(10, &[]);
        let probes = [
            Pose2::new(0.0, 0.0, 0.0),
            Pose2::new(0.3, -0.2, 0.05),
            Pose2::new(3.0, 1.0, 0.5),
            Pose2::new(2.6, 1.2, 0.45),
            Pose2::new(-0.4, 0.3, -0.05),
        ];
        let half = [0.1, 0.1, 0.02];
        let mut counts = [0u64; 5];
        let n = 4_000_000u64;
        for _ in 0..n {
            let p = s.sample(&mut rng);
            for (k, q) in probes.iter().enumerate() {
                if (p.x - q.x).abs() < half[0]
                    && (p.y - q.y).abs() < half[1]
                    && wrap_angle(p.theta - q.theta).abs() < half[2]
                {
                    counts[k] += 1;
                }
            }
        }
        let vol = 8.0 * half[0] * half[1] * half[2];
        for (k, q) in probes.iter().enumerate() {
            let empirical = counts[k] as f64 / (n as f64 * vol);
            let exact = b.density(q).unwrap();
            assert!((empirical - exact).abs() / exact < 0.05, "probe {k}: {empirical} vs {exact}");
        }
    }

    #[test]
    fn density_integrates_to_one() {
        let b = two_modes(0.5);
        let mut rng = stream(11, &[]);
        let (lo, hi) = ([-4.0, -4.0, -1.5], [7.0, 5.0, 2.0]);
        let vol: f64 = (0..3).map(|i| hi[i] - lo[i]).product();
        let n = 400_000;
        let (mut acc, mut acc2) = (0.0, 0.0);
        for _ in 0..n {
            let p = Pose2::new(
                rng.random_range(lo[0]..hi[0]),
                rng.random_range(lo[1]..hi[1]),
                rng.random_range(lo[2]..hi[2]),
            );
            let d = b.density(&p).unwrap() * vol;
            acc += d;
            acc2 += d * d;
        }
        let integral = acc / n as f64;
        let stderr = ((acc2 / n as f64 - integral * integral) / n as f64).sqrt();
        assert!((integral - 1.0).abs() < 4.0 * stderr && stderr < 0.02, "integral {integral} +- {stderr}");
    }

    fn obs(x: f64, y: f64, th: f64, vx: f64, vy: f64) -> ObstacleState {
        ObstacleState { id: 1, pose: Pose2::new(x, y, th), velocity: (vx, vy), extents: Extents::default() }
    }

    #[test]
    fn stationary_track_converges() {
        let truth = obs(5.0, -3.0, 0.7, 0.0, 0.0);
        let mut t = EkfTracker::initialize(&obs(5.5, -2.5, 0.6, 0.0, 0.0), 0.0, EkfConfig::default());
        let mut last_trace = f64::INFINITY;
        for i in 0..200 {
            t.step(&truth, 0.01).unwrap();
            let tr = t.covariance.trace();
            if i > 0 {
                assert!(tr <= last_trace + 1e-12, "trace rose at step {i}: {tr} > {last_trace}");
            }
            last_trace = tr;
        }
        assert!(t.pose().distance(&truth.pose) < 1e-3);
    }

    #[test]
    fn constant_velocity_track_error_vanishes() {
        let (vx, vy) = (8.0_f64, 6.0_f64);
        let th = vy.atan2(vx);
        let mut t = EkfTracker::initialize(&obs(0.0, 0.0, th, vx * 0.5, vy * 0.5), 0.0, EkfConfig::default());
        let dt = 0.01;
        let mut errors = Vec::new();
        for k in 1..=50 {
            let time = k as f64 * dt;
            let b = t.step(&obs(vx * time, vy * time, th, 0.0, 0.0), dt).unwrap();
            // One-step-ahead prediction error against the true next position.
            let pred = b.propagate(dt, &t.motion_model()).unwrap();
            let next = (vx * (time + dt), vy * (time + dt));
            errors.push((pred.modes[0].mean.x - next.0).hypot(pred.modes[0].mean.y - next.1));
        }
        let peak = errors.iter().cloned().fold(0.0, f64::max);
        assert!(errors[49] < 0.1 * peak, "errors {errors:?}");
        assert!(errors[20..].windows(2).all(|w| w[1] < w[0]), "errors {errors:?}");
    }

    #[test]
    fn noiseless_predict_keeps_covariance() {
        let cfg = EkfConfig { process_noise: [0.0; 4], ..EkfConfig::default() };
        let mut t = EkfTracker::initialize(&obs(0.0, 0.0, 0.0, 0.0, 0.0), 0.0, cfg);
        let before = t.covariance;
        t.predict(0.1).unwrap();
        // v = 0 and theta = 0: F only couples v into x, P has no x-v term yet.
        let expected = {
            let mut p = before;
            p[(0, 0)] += 0.01 * before[(3, 3)];
            p[(0, 3)] += 0.1 * before[(3, 3)];
            p[(3, 0)] += 0.1 * before[(3, 3)];
            p
        };
        assert!((t.covariance - expected).abs().max() < 1e-12);
        // Identity transition with Q = 0 leaves a belief unchanged.
        let b = t.belief();
        let m = MotionModel::constant_velocity(0.0, 0.0).with_noise(Matrix3::zeros());
        assert_eq!(b.propagate(0.2, &m).unwrap().modes[0].covariance, b.modes[0].covariance);
    }

    #[test]
    fn ekf_belief_is_normalized() {
        let b = ekf_track(&obs(0.0, 0.0, 0.0, 5.0, 0.0), &obs(0.05, 0.0, 0.0, 5.0, 0.0), 0.01, EkfConfig::default())
            .unwrap();
        assert_eq!(b.modes.len(), 1);
        assert_abs_diff_eq!(b.modes[0].weight, 1.0);
    }

    proptest! {
        #[test]
        fn propagation_is_a_semigroup(a in 0.0..2.0f64, c in 0.0..2.0f64, vx in -15.0..15.0f64, vy in -15.0..15.0f64) {
            let b = two_modes(0.3);
            let m = MotionModel::constant_velocity(vx, vy);
            let two = b.propagate(a, &m).unwrap().propagate(c, &m).unwrap();
            let one = b.propagate(a + c, &m).unwrap();
            for (p, q) in two.modes.iter().zip(&one.modes) {
                prop_assert!((p.mean.x - q.mean.x).abs() < 1e-9);
                prop_assert!((p.mean.y - q.mean.y).abs() < 1e-9);
                prop_assert!((p.covariance - q.covariance).abs().max() < 1e-9);
            }
            let total: f64 = two.modes.iter().map(|m| m.weight).sum();
            prop_assert!((total - 1.0).abs() < 1e-9);
        }

        #[test]
        fn propagated_covariances_stay_psd(steps in proptest::collection::vec(0.0..1.0f64, 1..20)) {
            let mut b = two_modes(0.6);
            let m = MotionModel::constant_velocity(2.0, -1.0);
            for dt in steps {
                b = b.propagate(dt, &m).unwrap();
            }
            for mode in &b.modes {
                prop_assert!(cholesky_with_jitter(&mode.covariance).is_ok());
            }
        }
    }
}
