//! Instantaneous collision probability between the ego footprint and an
//! uncertain obstacle: Monte-Carlo estimator, dense quadrature and the
//! closest-obstacle rule.

use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::{rect_intersects, EgoState, Extents, Footprint, ObstacleState, Pose2};
use crate::prediction::{gaussian_draw, GaussianMode, MixtureBelief, MixtureSampler};
use crate::{Error, Result};

/// Smallest Monte-Carlo sample count accepted.
pub const MIN_MC_SAMPLES: usize = 100;
/// Coarsest quadrature spacing accepted, meters.
pub const MAX_QUADRATURE_RESOLUTION: f64 = 0.25;
/// Quadrature truncation in standard deviations.
pub const QUADRATURE_SIGMAS: f64 = 6.0;
/// Minimum quadrature nodes per non-degenerate direction.
pub const MIN_QUADRATURE_NODES: usize = 17;
/// Beyond this many standard deviations a mode is treated as unreachable.
pub(crate) const REJECT_SIGMAS: f64 = 6.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimateMethod {
    MonteCarlo,
    Quadrature,
}

/// A collision probability with its sampling uncertainty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskEstimate {
    pub value: f64,
    pub stderr: f64,
    pub samples: u64,
    pub method: EstimateMethod,
}

impl RiskEstimate {
    pub fn zero(samples: u64, method: EstimateMethod) -> Self {
        Self { value: 0.0, stderr: 0.0, samples, method }
    }

    /// True when `other` lies within `k` combined standard errors.
    pub fn agrees_with(&self, other: &RiskEstimate, k: f64) -> bool {
        let combined = (self.stderr * self.stderr + other.stderr * other.stderr).sqrt();
        (self.value - other.value).abs() <= k * combined
    }
}

/// True when no mode of `belief` can bring an obstacle footprint within
/// touching range of `ego` except with negligible probability.
pub(crate) fn unreachable(ego: &Footprint, belief: &MixtureBelief, extents: &Extents) -> bool {
    let reach = ego.circumradius() + extents.circumradius();
    belief.modes.iter().filter(|m| m.weight > 0.0).all(|m| {
        let d = (m.mean.x - ego.center.x).hypot(m.mean.y - ego.center.y);
        d > reach + REJECT_SIGMAS * m.position_sigma_max()
    })
}

/// Fraction of `n` draws from `N(mean, factor factor^T)` whose footprint
/// touches `ego`.
pub(crate) fn gaussian_hits<R: Rng + ?Sized>(
    ego: &Footprint,
    mean: &Pose2,
    factor: &Matrix3<f64>,
    extents: &Extents,
    n: usize,
    rng: &mut R,
) -> usize {
    let mut hits = 0;
    for _ in 0..n {
        let p = gaussian_draw(mean, factor, rng);
        if rect_intersects(ego, &extents.at(p)) {
            hits += 1;
        }
    }
    hits
}

/// Monte-Carlo estimate of the probability that the obstacle footprint
/// overlaps `ego`. Standard error is the binomial `sqrt(p (1 - p) / n)`.
pub fn collision_prob_mc<R: Rng + ?Sized>(
    ego: &Footprint,
    belief: &MixtureBelief,
    extents: &Extents,
    n: usize,
    rng: &mut R,
) -> Result<RiskEstimate> {
    if n < MIN_MC_SAMPLES {
        return Err(Error::TooFewSamples(n));
    }
    if !belief.is_finite() || !ego.center.is_finite() {
        return Err(Error::NonFinite("collision inputs"));
    }
    if unreachable(ego, belief, extents) {
        return Ok(RiskEstimate::zero(n as u64, EstimateMethod::MonteCarlo));
    }
    let sampler = MixtureSampler::new(belief);
    let mut hits = 0usize;
    for _ in 0..n {
        if rect_intersects(ego, &extents.at(sampler.sample(rng))) {
            hits += 1;
        }
    }
    Ok(binomial_estimate(hits, n))
}

pub(crate) fn binomial_estimate(hits: usize, n: usize) -> RiskEstimate {
    let p = hits as f64 / n as f64;
    RiskEstimate {
        value: p,
        stderr: (p * (1.0 - p) / n as f64).sqrt(),
        samples: n as u64,
        method: EstimateMethod::MonteCarlo,
    }
}

/// Deterministic quadrature of the collision integral.
///
/// Each mode is integrated on a tensor grid in its whitened eigenbasis,
/// spanning +-6 standard deviations per direction with node spacing no
/// coarser than `resolution` in physical units (at least 17 nodes per
/// direction). Degenerate directions collapse to a single node.
pub fn collision_prob_quadrature(
    ego: &Footprint,
    belief: &MixtureBelief,
    extents: &Extents,
    resolution: f64,
) -> Result<RiskEstimate> {
    if !(resolution > 0.0) || resolution > MAX_QUADRATURE_RESOLUTION {
        return Err(Error::ResolutionTooCoarse(resolution));
    }
    if !belief.is_finite() || !ego.center.is_finite() {
        return Err(Error::NonFinite("collision inputs"));
    }
    let mut value = 0.0;
    let mut nodes_total = 0u64;
    for mode in belief.modes.iter().filter(|m| m.weight > 0.0) {
        let (p, nodes) = quadrature_mode(ego, mode, extents, resolution);
        value += mode.weight * p;
        nodes_total += nodes;
    }
    Ok(RiskEstimate {
        value: value.clamp(0.0, 1.0),
        stderr: 0.0,
        samples: nodes_total,
        method: EstimateMethod::Quadrature,
    })
}

fn quadrature_mode(ego: &Footprint, mode: &GaussianMode, extents: &Extents, resolution: f64) -> (f64, u64) {
    let sym = 0.5 * (mode.covariance + mode.covariance.transpose());
    let eig = SymmetricEigen::new(sym);
    let scale = eig.eigenvalues.max().abs().max(1.0);
    let mut axes: Vec<(Vector3<f64>, Vec<f64>)> = Vec::with_capacity(3);
    for j in 0..3 {
        let lambda = eig.eigenvalues[j];
        let dir: Vector3<f64> = eig.eigenvectors.column(j).into_owned();
        if lambda <= 1e-14 * scale {
            axes.push((dir, vec![0.0]));
            continue;
        }
        let sigma = lambda.sqrt();
        let span = 2.0 * QUADRATURE_SIGMAS * sigma;
        let count = ((span / resolution).ceil() as usize + 1).max(MIN_QUADRATURE_NODES) | 1;
        let h = 2.0 * QUADRATURE_SIGMAS / (count - 1) as f64;
        let zs = (0..count).map(|i| -QUADRATURE_SIGMAS + i as f64 * h).collect();
        axes.push((dir * sigma, zs));
    }
    let (a, b, c) = (&axes[0], &axes[1], &axes[2]);
    let mut num = 0.0;
    let mut den = 0.0;
    for &za in &a.1 {
        for &zb in &b.1 {
            let partial = a.0 * za + b.0 * zb;
            let wab = za * za + zb * zb;
            for &zc in &c.1 {
                let d = partial + c.0 * zc;
                let w = (-0.5 * (wab + zc * zc)).exp();
                den += w;
                let pose = Pose2::new(mode.mean.x + d[0], mode.mean.y + d[1], mode.mean.theta + d[2]);
                if rect_intersects(ego, &extents.at(pose)) {
                    num += w;
                }
            }
        }
    }
    let nodes = (a.1.len() * b.1.len() * c.1.len()) as u64;
    (if den > 0.0 { num / den } else { 0.0 }, nodes)
}

/// Obstacle with the smallest center-to-center distance; ties go to the
/// lowest id.
pub fn closest_obstacle(ego: &EgoState, obstacles: &[ObstacleState]) -> Option<u32> {
    obstacles
        .iter()
        .map(|o| (o.pose.distance(&ego.pose), o.id))
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
        .map(|(_, id)| id)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use approx::assert_abs_diff_eq;

    fn diag(a: f64, b: f64, c: f64) -> Matrix3<f64> {
        Matrix3::from_diagonal(&Vector3::new(a, b, c))
    }

    fn ego() -> Footprint {
        Extents::default().at(Pose2::origin())
    }

    #[test]
    fn certain_collision() {
        let b = MixtureBelief::single(Pose2::origin(), Matrix3::zeros(), 0.0);
        let mut rng = stream(1, &[]);
        let e = collision_prob_mc(&ego(), &b, &Extents::default(), 1000, &mut rng).unwrap();
        assert_eq!(e.value, 1.0);
        assert_eq!(e.stderr, 0.0);
        let q = collision_prob_quadrature(&ego(), &b, &Extents::default(), 0.1).unwrap();
        assert_eq!(q.value, 1.0);
    }

    #[test]
    fn far_obstacle_is_safe() {
        let b = MixtureBelief::single(Pose2::new(500.0, 0.0, 0.0), diag(1.0, 1.0, 0.01), 0.0);
        let mut rng = stream(2, &[]);
        assert_eq!(collision_prob_mc(&ego(), &b, &Extents::default(), 1000, &mut rng).unwrap().value, 0.0);
        let b = MixtureBelief::single(Pose2::new(20.0, 0.0, 0.0), Matrix3::zeros(), 0.0);
        assert_eq!(collision_prob_quadrature(&ego(), &b, &Extents::default(), 0.1).unwrap().value, 0.0);
    }

    #[test]
    fn small_sample_counts_rejected() {
        let b = MixtureBelief::single(Pose2::origin(), Matrix3::zeros(), 0.0);
        let mut rng = stream(3, &[]);
        assert!(matches!(
            collision_prob_mc(&ego(), &b, &Extents::default(), 99, &mut rng),
            Err(Error::TooFewSamples(99))
        ));
        assert!(collision_prob_quadrature(&ego(), &b, &Extents::default(), 0.3).is_err());
    }

    #[test]
    fn mc_agrees_with_quadrature_on_offset_obstacle() {
        let b = MixtureBelief::single(Pose2::new(6.0, 0.0, 0.0), diag(4.0, 1.0, 0.01), 0.0);
        let q = collision_prob_quadrature(&ego(), &b, &Extents::default(), 0.1).unwrap();
        let mut rng = stream(4, &[]);
        let m = collision_prob_mc(&ego(), &b, &Extents::default(), 20_000, &mut rng).unwrap();
        assert!((m.value - q.value).abs() <= 3.0 * m.stderr, "mc {} quad {}", m.value, q.value);
    }

    #[test]
    fn quadrature_converges_under_refinement() {
        let b = MixtureBelief::single(Pose2::new(6.0, 0.0, 0.0), diag(4.0, 1.0, 0.01), 0.0);
        let coarse = collision_prob_quadrature(&ego(), &b, &Extents::default(), 0.2).unwrap();
        let fine = collision_prob_quadrature(&ego(), &b, &Extents::default(), 0.1).unwrap();
        assert!((coarse.value - fine.value).abs() < 0.005, "{} vs {}", coarse.value, fine.value);
    }

    #[test]
    fn translation_invariance() {
        let b = MixtureBelief::single(Pose2::new(5.0, 1.0, 0.2), diag(2.0, 1.0, 0.02), 0.0);
        let base = collision_prob_quadrature(&ego(), &b, &Extents::default(), 0.1).unwrap().value;
        let (dx, dy) = (37.25, -12.5);
        let moved_ego = Extents::default().at(Pose2::new(dx, dy, 0.0));
        let mut moved = b.clone();
        moved.modes[0].mean = moved.modes[0].mean.translated(dx, dy);
        let shifted = collision_prob_quadrature(&moved_ego, &moved, &Extents::default(), 0.1).unwrap().value;
        assert_abs_diff_eq!(base, shifted, epsilon = 1e-6);
    }

    #[test]
    fn rotation_invariance() {
        let b = MixtureBelief::single(Pose2::new(5.0, 1.0, 0.2), diag(2.0, 1.0, 0.02), 0.0);
        let base = collision_prob_quadrature(&ego(), &b, &Extents::default(), 0.1).unwrap().value;
        let phi: f64 = 0.7;
        let (s, c) = phi.sin_cos();
        let rot = Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0);
        let m = &b.modes[0];
        let rotated = MixtureBelief::single(
            Pose2::new(c * m.mean.x - s * m.mean.y, s * m.mean.x + c * m.mean.y, m.mean.theta + phi),
            rot * m.covariance * rot.transpose(),
            0.0,
        );
        let ego_r = Extents::default().at(Pose2::new(0.0, 0.0, phi));
        let r = collision_prob_quadrature(&ego_r, &rotated, &Extents::default(), 0.1).unwrap().value;
        assert!((base - r).abs() < 0.005, "{base} vs {r}");
    }

    #[test]
    fn enlarging_ego_never_lowers_quadrature() {
        let b = MixtureBelief::single(Pose2::new(5.5, 0.8, 0.3), diag(1.5, 0.8, 0.02), 0.0);
        let mut last = 0.0;
        for k in [1.0, 1.1, 1.25, 1.5] {
            let e = Extents::default().scaled(k).at(Pose2::origin());
            let v = collision_prob_quadrature(&e, &b, &Extents::default(), 0.1).unwrap().value;
            assert!(v >= last, "scale {k}: {v} < {last}");
            last = v;
        }
    }

    #[test]
    fn mixture_weights_combine_linearly() {
        let near = GaussianMode::new(Pose2::origin(), Matrix3::zeros(), 0.25);
        let far = GaussianMode::new(Pose2::new(50.0, 0.0, 0.0), Matrix3::zeros(), 0.75);
        let b = MixtureBelief::new(vec![near, far], 0.0).unwrap();
        let q = collision_prob_quadrature(&ego(), &b, &Extents::default(), 0.1).unwrap();
        assert_abs_diff_eq!(q.value, 0.25);
    }

    fn obstacle(id: u32, x: f64, y: f64) -> ObstacleState {
        ObstacleState { id, pose: Pose2::new(x, y, 0.0), velocity: (0.0, 0.0), extents: Extents::default() }
    }

    #[test]
    fn closest_obstacle_rules() {
        let e = EgoState::new(Pose2::origin(), 0.0, 0.0);
        assert_eq!(closest_obstacle(&e, &[]), None);
        assert_eq!(closest_obstacle(&e, &[obstacle(1, 10.0, 0.0), obstacle(2, 0.0, 3.0)]), Some(2));
        assert_eq!(closest_obstacle(&e, &[obstacle(7, 0.0, 5.0), obstacle(4, 5.0, 0.0)]), Some(4));
    }
}
