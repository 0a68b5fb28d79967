//! One question to a simulated operator, judged with and without
//! accounting for latency, and checks on waypoint answers.
//!
//! `cargo run --release --example vqa_round`

use std::f64::consts::FRAC_PI_2;

use latency_risk::geometry::{ControlCommand, EgoState, Extents, ObstacleState, Pose2, Trajectory};
use latency_risk::prediction::{EkfConfig, EkfTracker};
use latency_risk::scenario::ScenarioKind;
use latency_risk::vqa::{
    generate_query, parse_answer, simulated_operator, validate_feasibility, DecisionTemplate, OperatorAnswer,
    OperatorConfig, OperatorContext, OperatorMode, Waypoint,
};

fn main() -> latency_risk::Result<()> {
    let dt = 0.01;
    let ego = EgoState::new(Pose2::new(0.0, 0.0, 0.0), 10.0, 0.0);
    let reference = Trajectory::rollout(ego, &vec![ControlCommand::coast(); 800], dt)?;
    // A car crossing our path from the right.
    let crossing = ObstacleState {
        id: 1,
        pose: Pose2::new(18.0, -16.0, FRAC_PI_2),
        velocity: (0.0, 8.0),
        extents: Extents::default(),
    };
    let track = EkfTracker::initialize(&crossing, 0.0, EkfConfig::default()).track();
    let template = DecisionTemplate::for_kind(ScenarioKind::LeftTurn);
    let query = generate_query(1, 0.0, 0, &template, None);
    println!("question: {} {:?}", query.text, query.options);

    let config = OperatorConfig::default();
    for latency in [0.0, 0.4, 0.8] {
        let ctx = OperatorContext { ego: &ego, ego_extents: &Extents::default(), reference: &reference, track: &track, latency };
        for mode in [OperatorMode::Baseline, OperatorMode::LatencyAware] {
            let d = simulated_operator(&query, &template, mode, &ctx, &config, 3)?;
            let action = parse_answer(&query, &template, &d.answer)?;
            println!(
                "latency {latency:.1} s {:<13} perceived {:.3} -> {:?} ({action:?})",
                mode.name(),
                d.perceived.value,
                d.answer.option.as_deref().unwrap_or("")
            );
        }
    }

    let mut template = template;
    template.allow_waypoint = true;
    let query = generate_query(2, 0.0, 0, &template, None);
    for (name, target) in [
        ("gentle lane shift", Pose2::new(30.0, 2.0, 0.0)),
        ("too sharp", Pose2::new(4.0, 4.0, 0.0)),
        ("behind us", Pose2::new(-5.0, 0.0, 0.0)),
    ] {
        let answer = OperatorAnswer::waypoint(2, Waypoint { pose: target, speed: None }, 0.3);
        let action = parse_answer(&query, &template, &answer)?;
        let verdict = validate_feasibility(&action, &ego, &reference, 0.0, &Default::default());
        println!("waypoint {name:<18} {verdict:?}");
    }
    Ok(())
}
