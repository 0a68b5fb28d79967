//! Risk maps around a parked car for increasing latency, written as PNG
//! heatmaps (red is unsafe).
//!
//! `cargo run --release --example licom_sweep -- [out_dir]`

use latency_risk::geometry::{Extents, ObstacleState, Pose2};
use latency_risk::licom::{compute_licom, write_heatmap, EgoTemplate, GridSpec, LicomConfig};
use latency_risk::licp::SafetyConfig;
use latency_risk::prediction::{MixtureBelief, MotionModel, ObstacleTrack};
use nalgebra::{Matrix3, Vector3};

fn main() -> latency_risk::Result<()> {
    let out = std::path::PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "licom-sweep".into()));
    std::fs::create_dir_all(&out)?;
    let pose = Pose2::new(0.0, 0.0, 0.0);
    let track = ObstacleTrack {
        observed: ObstacleState { id: 1, pose, velocity: (0.0, 0.0), extents: Extents::default() },
        belief: MixtureBelief::single(pose, Matrix3::from_diagonal(&Vector3::new(0.25, 0.25, 0.005)), 0.0),
        motion: MotionModel::constant_velocity(0.0, 0.0),
    };
    let spec = GridSpec::centered(0.0, 0.0, 30.0, 0.5)?;
    let ego = EgoTemplate { heading: 0.0, extents: Extents::default() };
    let config = LicomConfig { safety: SafetyConfig::default().with_budget(100, 50), pruning: true };
    for tau in [0.5, 1.0, 1.5, 2.0, 2.5] {
        let grid = compute_licom(&spec, &ego, Some(&track), tau, 0.0, &config, 7)?;
        let path = out.join(format!("licom-tau{tau:.1}.png"));
        write_heatmap(&grid, config.safety.lambda, 8, &path)?;
        println!("tau {tau:.1} s  unsafe cells {:>4}  -> {}", grid.unsafe_count(config.safety.lambda), path.display());
    }
    Ok(())
}
