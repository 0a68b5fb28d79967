//! How the collision probability at the moment a decision takes effect
//! grows with latency, for two cars approaching head-on.
//!
//! `cargo run --release --example licp_latency`

use std::f64::consts::PI;

use latency_risk::geometry::{Extents, Pose2};
use latency_risk::licp::{is_safe, licp_seeded, LatencyQuery, SafetyConfig};
use latency_risk::prediction::{MixtureBelief, MotionModel};
use nalgebra::{Matrix3, Vector3};

fn main() -> latency_risk::Result<()> {
    let config = SafetyConfig::default();
    println!("lambda = {}", config.lambda);
    for tau in [0.0, 0.1, 0.2, 0.3, 0.4, 0.5] {
        let query = LatencyQuery {
            issue_time: 0.0,
            latency: tau,
            // The ego keeps driving at 10 m/s while the answer is in flight.
            ego_at_effect: Pose2::new(10.0 * tau, 0.0, 0.0),
            ego_extents: Extents::default(),
            belief: MixtureBelief::single(
                Pose2::new(12.0, 0.0, PI),
                Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, 0.01)),
                0.0,
            ),
            motion: MotionModel::constant_velocity(-10.0, 0.0)
                .with_noise(Matrix3::from_diagonal(&Vector3::new(0.15, 0.15, 0.01))),
            obstacle_extents: Extents::default(),
        };
        let risk = licp_seeded(&query, &config, 42)?;
        println!(
            "tau {:.1} s  risk {:.4} +- {:.4}  {}",
            tau,
            risk.value,
            risk.stderr,
            if is_safe(&risk, &config) { "safe" } else { "unsafe" }
        );
    }
    Ok(())
}
