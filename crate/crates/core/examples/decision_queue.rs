//! Delayed decisions: when does an answer actually take effect?
//!
//! `cargo run --example decision_queue`

use latency_risk::latency::{draw_latency, DecisionQueue, Delay, LatencyModel};
use latency_risk::rng::stream;
use latency_risk::vqa::DecisionAction;

fn main() -> latency_risk::Result<()> {
    let dt = 0.01;
    let mut queue = DecisionQueue::new(dt);
    let model = LatencyModel { human: Delay::Jitter { mean: 0.25, half_width: 0.05 }, network: Delay::fixed(0.1) };
    let mut rng = stream(7, &[1]);
    for (id, issued) in [(1, 0.503), (2, 0.51), (3, 0.9)] {
        let latency = draw_latency(&model, &mut rng);
        let p = queue.enqueue(id, DecisionAction::ProceedOnTrajectory, issued, latency)?;
        println!("query {id}: issued {issued:.3} s + {latency:.3} s -> step {} ({:.2} s)", p.apply_step, p.apply_at);
    }
    queue.enqueue(4, DecisionAction::BrakeToStop { deceleration: 6.0 }, 0.6, 0.0)?;
    for step in 0..200u64 {
        for d in queue.poll_due_step(step) {
            println!("step {step}: apply query {} ({:?})", d.query_id, d.action);
        }
    }
    Ok(())
}
