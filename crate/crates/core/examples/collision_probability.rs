//! Instantaneous collision probability by sampling and by quadrature.
//!
//! `cargo run --release --example collision_probability`

use latency_risk::collision::{collision_prob_mc, collision_prob_quadrature};
use latency_risk::geometry::{Extents, Pose2};
use latency_risk::prediction::{GaussianMode, MixtureBelief};
use nalgebra::{Matrix3, Vector3};
use rand::SeedableRng;

fn main() -> latency_risk::Result<()> {
    let ego = Extents::default().at(Pose2::new(0.0, 0.0, 0.0));
    let cov = Matrix3::from_diagonal(&Vector3::new(0.8, 0.5, 0.02));
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
    println!("offset   monte-carlo (n=20000)   quadrature (0.1 m)");
    for dx in [2.0, 3.5, 4.5, 5.5, 7.0] {
        let belief = MixtureBelief::single(Pose2::new(dx, 0.8, 0.1), cov, 0.0);
        let mc = collision_prob_mc(&ego, &belief, &Extents::default(), 20_000, &mut rng)?;
        let q = collision_prob_quadrature(&ego, &belief, &Extents::default(), 0.1)?;
        println!("{dx:>4.1} m   {:.4} +- {:.4}          {:.4}", mc.value, mc.stderr, q.value);
    }

    // Two hypotheses about where the obstacle is: in our lane or the next.
    let mixture = MixtureBelief::new(
        vec![
            GaussianMode::new(Pose2::new(4.0, 0.0, 0.0), cov, 0.3),
            GaussianMode::new(Pose2::new(4.0, 3.5, 0.0), cov, 0.7),
        ],
        0.0,
    )?;
    let q = collision_prob_quadrature(&ego, &mixture, &Extents::default(), 0.1)?;
    println!("mixture (30% in lane): {:.4}", q.value);
    Ok(())
}
