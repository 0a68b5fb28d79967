//! Latency-induced collision probability: expected collision probability
//! at the moment a delayed decision takes effect, given what is known when
//! the query is issued.

use nalgebra::Matrix3;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::collision::{gaussian_hits, unreachable, EstimateMethod, RiskEstimate, REJECT_SIGMAS};
use crate::geometry::{Extents, Footprint, Pose2};
use crate::prediction::{psd_sqrt, GaussianMode, MixtureBelief, MixtureSampler, MotionModel};
use crate::rng::{fork_seed, stream};
use crate::{Error, Result};

/// Safety threshold and Monte-Carlo budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SafetyConfig {
    /// A decision is safe when its risk is strictly below `lambda`.
    pub lambda: f64,
    pub outer_samples: usize,
    pub inner_samples: usize,
    /// Simulation step used when rolling the ego forward.
    pub dt: f64,
}

impl Default for SafetyConfig {
    fn default() -> Self {
        Self { lambda: 0.3, outer_samples: 200, inner_samples: 100, dt: 0.01 }
    }
}

impl SafetyConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::InvalidInput(format!("lambda {} outside [0, 1]", self.lambda)));
        }
        if self.outer_samples < 10 || self.inner_samples < 10 {
            return Err(Error::InvalidInput("outer and inner sample counts must be >= 10".into()));
        }
        if !(self.dt > 0.0) {
            return Err(Error::InvalidInput("dt must be positive".into()));
        }
        Ok(())
    }

    pub fn with_budget(mut self, outer: usize, inner: usize) -> Self {
        self.outer_samples = outer;
        self.inner_samples = inner;
        self
    }
}

/// Inputs of one latency-aware risk evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencyQuery {
    /// When the query is issued, seconds.
    pub issue_time: f64,
    /// Delay until the decision takes effect, seconds.
    pub latency: f64,
    /// Ego pose at `issue_time + latency` under the evaluated decision.
    pub ego_at_effect: Pose2,
    pub ego_extents: Extents,
    /// Obstacle belief at `issue_time`.
    pub belief: MixtureBelief,
    pub motion: MotionModel,
    pub obstacle_extents: Extents,
}

impl LatencyQuery {
    pub fn effect_time(&self) -> f64 {
        self.issue_time + self.latency
    }

    fn validate(&self) -> Result<()> {
        if !(self.latency >= 0.0) || !self.latency.is_finite() || !self.issue_time.is_finite() {
            return Err(Error::NonFinite("latency query time"));
        }
        if !self.ego_at_effect.is_finite() || !self.belief.is_finite() {
            return Err(Error::NonFinite("latency query state"));
        }
        let (vx, vy) = self.motion.velocity;
        if !(vx.is_finite() && vy.is_finite()) || self.motion.process_noise.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("motion model"));
        }
        Ok(())
    }
}

/// Nested Monte-Carlo estimate of the collision probability at the
/// effect time.
///
/// The outer loop draws the obstacle's current pose from the belief; the
/// inner loop draws its pose after the latency from the transition model
/// conditioned on that draw and tests it against the ego footprint at the
/// effect time. Each outer draw uses its own stream derived from a seed
/// taken from `rng`, so results do not depend on evaluation order. The
/// reported standard error comes from the spread of the outer averages.
pub fn licp<R: Rng + ?Sized>(query: &LatencyQuery, config: &SafetyConfig, rng: &mut R) -> Result<RiskEstimate> {
    config.validate()?;
    query.validate()?;
    let seed = fork_seed(rng);
    licp_seeded(query, config, seed)
}

/// As [`licp`] but keyed directly by a seed.
pub fn licp_seeded(query: &LatencyQuery, config: &SafetyConfig, seed: u64) -> Result<RiskEstimate> {
    config.validate()?;
    query.validate()?;
    let k_out = config.outer_samples;
    let k_in = config.inner_samples;
    let total = (k_out * k_in) as u64;
    let ego = query.ego_extents.at(query.ego_at_effect);
    let tau = query.latency;

    let propagated = query.belief.propagate(tau, &query.motion)?;
    if unreachable(&ego, &propagated, &query.obstacle_extents) {
        return Ok(RiskEstimate::zero(total, EstimateMethod::MonteCarlo));
    }

    let outer = MixtureSampler::new(&query.belief);
    let inner_cov: Matrix3<f64> = query.motion.process_noise * tau;
    let inner_factor = psd_sqrt(&inner_cov);
    let inner_sigma = GaussianMode::new(Pose2::origin(), inner_cov, 1.0).position_sigma_max();
    let deterministic_inner = inner_factor.iter().all(|v| *v == 0.0);
    let reach = ego.circumradius() + query.obstacle_extents.circumradius() + REJECT_SIGMAS * inner_sigma;
    let (vx, vy) = query.motion.velocity;

    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for k in 0..k_out {
        let mut r = stream(seed, &[k as u64]);
        let x = outer.sample(&mut r);
        let mean = Pose2::new(x.x + vx * tau, x.y + vy * tau, x.theta);
        let p = if (mean.x - ego.center.x).hypot(mean.y - ego.center.y) > reach {
            0.0
        } else if deterministic_inner {
            if crate::geometry::rect_intersects(&ego, &query.obstacle_extents.at(mean)) {
                1.0
            } else {
                0.0
            }
        } else {
            gaussian_hits(&ego, &mean, &inner_factor, &query.obstacle_extents, k_in, &mut r) as f64 / k_in as f64
        };
        sum += p;
        sum_sq += p * p;
    }
    let n = k_out as f64;
    let mean = sum / n;
    let var = ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0);
    Ok(RiskEstimate {
        value: mean.clamp(0.0, 1.0),
        stderr: (var / n).sqrt(),
        samples: total,
        method: EstimateMethod::MonteCarlo,
    })
}

/// Safety predicate: the no-collision probability must exceed `1 - lambda`,
/// i.e. the risk must be strictly below `lambda`.
pub fn is_safe(estimate: &RiskEstimate, config: &SafetyConfig) -> bool {
    estimate.value < config.lambda
}

/// Ego footprint helper for callers that hold only a pose.
pub fn ego_footprint(pose: Pose2, extents: &Extents) -> Footprint {
    extents.at(pose)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::collision::collision_prob_mc;
    use crate::rng::stream;
    use nalgebra::Vector3;

    fn diag(a: f64, b: f64, c: f64) -> Matrix3<f64> {
        Matrix3::from_diagonal(&Vector3::new(a, b, c))
    }

    fn query(mean: Pose2, cov: Matrix3<f64>, v: (f64, f64), ego: Pose2, tau: f64) -> LatencyQuery {
        LatencyQuery {
            issue_time: 0.0,
            latency: tau,
            ego_at_effect: ego,
            ego_extents: Extents::default(),
            belief: MixtureBelief::single(mean, cov, 0.0),
            motion: MotionModel::constant_velocity(v.0, v.1),
            obstacle_extents: Extents::default(),
        }
    }

    #[test]
    fn safety_boundary_is_strict() {
        let cfg = SafetyConfig::default();
        let est = |v| RiskEstimate { value: v, stderr: 0.0, samples: 1, method: EstimateMethod::MonteCarlo };
        assert!(is_safe(&est(0.0), &cfg));
        assert!(!is_safe(&est(0.3), &cfg));
        assert!(is_safe(&est(0.29), &cfg));
    }

    #[test]
    fn zero_latency_matches_instantaneous_estimate() {
        let q = query(Pose2::new(4.5, 0.5, 0.1), diag(1.0, 0.5, 0.01), (-3.0, 0.0), Pose2::origin(), 0.0);
        let cfg = SafetyConfig::default();
        let l = licp(&q, &cfg, &mut stream(1, &[])).unwrap();
        let m = collision_prob_mc(
            &Extents::default().at(Pose2::origin()),
            &q.belief,
            &Extents::default(),
            20_000,
            &mut stream(2, &[]),
        )
        .unwrap();
        assert!(l.agrees_with(&m, 3.0), "licp {l:?} mc {m:?}");
    }

    #[test]
    fn unreachable_obstacle_has_zero_risk() {
        let q = query(Pose2::new(500.0, 0.0, 0.0), diag(1.0, 1.0, 0.01), (-10.0, 0.0), Pose2::origin(), 0.4);
        let l = licp(&q, &SafetyConfig::default(), &mut stream(3, &[])).unwrap();
        assert_eq!(l.value, 0.0);
    }

    #[test]
    fn same_seed_same_bits() {
        let q = query(Pose2::new(8.0, 0.0, std::f64::consts::PI), diag(1.0, 1.0, 0.01), (-10.0, 0.0), Pose2::new(2.0, 0.0, 0.0), 0.3);
        let cfg = SafetyConfig::default();
        let a = licp(&q, &cfg, &mut stream(4, &[])).unwrap();
        let b = licp(&q, &cfg, &mut stream(4, &[])).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        assert_eq!(a.stderr.to_bits(), b.stderr.to_bits());
    }

    #[test]
    fn rejects_non_finite_and_tiny_budgets() {
        let mut q = query(Pose2::new(8.0, 0.0, 0.0), diag(1.0, 1.0, 0.01), (0.0, 0.0), Pose2::origin(), 0.3);
        q.latency = f64::NAN;
        assert!(licp(&q, &SafetyConfig::default(), &mut stream(5, &[])).is_err());
        q.latency = 0.1;
        assert!(licp(&q, &SafetyConfig::default().with_budget(5, 100), &mut stream(5, &[])).is_err());
    }
}
