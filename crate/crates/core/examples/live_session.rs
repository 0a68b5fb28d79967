//! A live session with a scripted console on loopback, then a replay of
//! its log.
//!
//! `cargo run --release --example live_session`

use std::net::TcpStream;
use std::time::Duration;

use latency_risk::latency::{Delay, LatencyModel};
use latency_risk::scenario::{trial_seed, ScenarioConfig, ScenarioKind};
use latency_risk::session::{read_message, replay_session, write_message, Gateway, Message, ServeOptions};
use latency_risk::vqa::OperatorAnswer;

fn console(addr: std::net::SocketAddr) -> latency_risk::Result<()> {
    let mut stream = TcpStream::connect(addr)?;
    let mut writer = stream.try_clone()?;
    let mut frames = 0;
    while let Some(msg) = read_message(&mut stream)? {
        match msg {
            Message::Frame(_) => frames += 1,
            Message::Query(q) => {
                println!("console: \"{}\" {:?} at {:.2} s with {} grids", q.text, q.options, q.presented_at, q.grids.len());
                // Answer "proceed" 250 ms after the question appeared.
                let answer = OperatorAnswer::option(q.id, &q.options[0], q.presented_at + 0.25);
                write_message(&mut writer, &Message::Answer(answer))?;
            }
            Message::Applied { id, apply_at } => println!("console: query {id} applied at {apply_at:.2} s"),
            Message::End { result } => {
                println!("console: session ended {:?} at {:.2} s after {frames} frames", result.outcome, result.end_time);
                break;
            }
            _ => {}
        }
    }
    Ok(())
}

fn main() -> latency_risk::Result<()> {
    let mut config = ScenarioConfig::for_kind(ScenarioKind::Merge);
    config.latency = LatencyModel { human: Delay::fixed(0.25), network: Delay::fixed(0.1) };
    let log = std::env::temp_dir().join("latency-risk-session.jsonl");
    let options = ServeOptions {
        pace: 4.0,
        seed: trial_seed(config.master_seed, 2),
        log_path: Some(log.clone()),
        hold_timeout: Some(Duration::from_secs(10)),
        ..ServeOptions::default()
    };
    let gateway = Gateway::bind("127.0.0.1:0")?;
    let addr = gateway.local_addr()?;
    let client = std::thread::spawn(move || console(addr));
    let outcome = gateway.run(&config, &options)?;
    client.join().expect("console thread")?;
    println!(
        "gateway: {} frames sent, {} dropped; latencies {:?}",
        outcome.frames_sent, outcome.frames_dropped, outcome.latencies
    );

    let replayed = replay_session(&log)?;
    let same = serde_json::to_vec(&replayed)? == serde_json::to_vec(&outcome.result)?;
    println!("replay of {} matches the live run: {same}", log.display());
    Ok(())
}
