//! Oriented rectangle overlap and separation.
//!
//! `cargo run --example sat_intersection`

use latency_risk::geometry::{rect_distance, rect_intersects, Extents, Pose2};

fn main() {
    let car = Extents::default();
    let ego = car.at(Pose2::new(0.0, 0.0, 0.0));
    let cases = [
        ("ahead, same heading", Pose2::new(6.0, 0.0, 0.0)),
        ("nose to tail, touching", Pose2::new(4.5, 0.0, 0.0)),
        ("diagonal, rotated 45 deg", Pose2::new(3.2, 2.2, std::f64::consts::FRAC_PI_4)),
        ("crossing at right angle", Pose2::new(2.0, 1.5, std::f64::consts::FRAC_PI_2)),
        ("side by side, next lane", Pose2::new(0.5, 3.5, 0.0)),
    ];
    for (name, pose) in cases {
        let other = car.at(pose);
        println!(
            "{name:<26} intersects {:<5} separation {:.3} m",
            rect_intersects(&ego, &other),
            rect_distance(&ego, &other)
        );
    }
}
