//! Tracks a noisy obstacle with the EKF and predicts where it will be.
//!
//! `cargo run --example ekf_prediction`

use latency_risk::geometry::{Extents, ObstacleState, Pose2};
use latency_risk::prediction::{EkfConfig, EkfTracker};
use rand::SeedableRng;
use rand_distr::{Distribution, Normal};

fn main() -> latency_risk::Result<()> {
    let dt = 0.01;
    let (vx, vy) = (8.0_f64, 1.0_f64);
    let heading = vy.atan2(vx);
    let noise = Normal::new(0.0, 0.1).unwrap();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    let truth = |t: f64| Pose2::new(vx * t, vy * t, heading);
    let observe = |t: f64, rng: &mut rand_chacha::ChaCha8Rng| ObstacleState {
        id: 1,
        pose: truth(t).translated(noise.sample(rng), noise.sample(rng)),
        velocity: (vx, vy),
        extents: Extents::default(),
    };

    let mut tracker = EkfTracker::initialize(&observe(0.0, &mut rng), 0.0, EkfConfig::default());
    for k in 1..=200 {
        let t = k as f64 * dt;
        tracker.step(&observe(t, &mut rng), dt)?;
        if k % 50 == 0 {
            let p = tracker.pose();
            println!(
                "t={t:.2}s  estimate ({:.2}, {:.2})  truth ({:.2}, {:.2})  speed {:.2}",
                p.x,
                p.y,
                truth(t).x,
                truth(t).y,
                tracker.state[3]
            );
        }
    }

    let track = tracker.track();
    for ahead in [0.0, 0.5, 1.0, 2.0] {
        let b = track.belief.propagate(ahead, &track.motion)?;
        let m = &b.modes[0];
        println!(
            "+{ahead:.1}s  mean ({:.2}, {:.2})  sigma x {:.3} m  sigma y {:.3} m",
            m.mean.x,
            m.mean.y,
            m.covariance[(0, 0)].sqrt(),
            m.covariance[(1, 1)].sqrt()
        );
    }
    Ok(())
}
