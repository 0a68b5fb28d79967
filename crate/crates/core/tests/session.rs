mod common;

use std::thread;
use std::time::Duration;

use common::{report, run_console, seed_with_query, Script};
use latency_risk::latency::{Delay, LatencyModel};
use latency_risk::licom::{classify, GridSpec, RiskGrid};
use latency_risk::scenario::{ScenarioConfig, ScenarioKind};
use latency_risk::session::{decode_grid, encode_grid, Gateway, LogEntry, Message, ServeOptions};

fn session_config(network: f64) -> ScenarioConfig {
    let mut c = ScenarioConfig::for_kind(ScenarioKind::Merge);
    c.latency = LatencyModel { human: Delay::fixed(0.25), network: Delay::fixed(network) };
    c
}

fn fast_options(seed: u64) -> ServeOptions {
    ServeOptions { pace: 4.0, seed, hold_timeout: Some(Duration::from_secs(20)), ..ServeOptions::default() }
}

#[test]
fn scripted_answers_apply_at_presented_plus_latency() {
    let network = 0.1;
    let config = session_config(network);
    let seed = seed_with_query(&config, 2024);
    let gateway = Gateway::bind("127.0.0.1:0").unwrap();
    let addr = gateway.local_addr().unwrap();
    let client = thread::spawn(move || run_console(addr, Script::default()));
    let outcome = gateway.run(&config, &fast_options(seed)).unwrap();
    let transcript = client.join().unwrap();

    let decisions: Vec<_> = outcome
        .log
        .iter()
        .filter_map(|e| match e {
            LogEntry::Decision(d) => Some(d),
            _ => None,
        })
        .collect();
    assert!(!decisions.is_empty(), "no answered query");
    let applied: Vec<(u64, f64)> = outcome
        .log
        .iter()
        .filter_map(|e| match e {
            LogEntry::Message { message: Message::Applied { id, apply_at }, .. } => Some((*id, *apply_at)),
            _ => None,
        })
        .collect();
    let dt = config.dt;
    for d in &decisions {
        let expected_step = ((d.presented_at + 0.25 + network) / dt - 1e-9).ceil() as u64;
        assert_eq!(d.network_latency, network);
        assert!((d.human_latency - 0.25).abs() < 1e-9);
        assert_eq!(d.apply_step, Some(expected_step), "query {}", d.answer.query_id);
        let (_, apply_at) = applied.iter().find(|(id, _)| *id == d.answer.query_id).expect("applied message");
        assert_eq!((apply_at / dt).round() as u64, expected_step);
    }
    let received_applied = transcript.received.iter().filter(|m| matches!(m, Message::Applied { .. })).count();
    assert_eq!(received_applied, applied.len());
    assert!(matches!(transcript.received.last(), Some(Message::End { .. })));
    report(&format!("latency accounting: PASS ({} decisions, apply_at exact)", decisions.len()));
}

#[test]
fn hold_without_console_times_out_at_the_query() {
    let config = session_config(0.1);
    let seed = seed_with_query(&config, 2024);
    let gateway = Gateway::bind("127.0.0.1:0").unwrap();
    let options = ServeOptions { hold_timeout: Some(Duration::from_millis(300)), ..fast_options(seed) };
    let err = gateway.run(&config, &options).unwrap_err().to_string();
    assert!(err.contains("held at step"), "{err}");
}

#[test]
fn hold_after_console_hangs_up() {
    let config = session_config(0.1);
    let seed = seed_with_query(&config, 2024);
    let gateway = Gateway::bind("127.0.0.1:0").unwrap();
    let addr = gateway.local_addr().unwrap();
    let client = thread::spawn(move || run_console(addr, Script { hang_up_on_query: true, ..Script::default() }));
    let options = ServeOptions { hold_timeout: Some(Duration::from_millis(500)), ..fast_options(seed) };
    let err = gateway.run(&config, &options).unwrap_err().to_string();
    let transcript = client.join().unwrap();
    assert_eq!(transcript.queries().len(), 1);
    let issue_time = transcript.queries()[0].presented_at;
    let held: u64 = err.rsplit(' ').next().unwrap().parse().unwrap();
    // The answer cannot arrive before the query, so the ego stops within
    // a few steps of it.
    assert!((held as f64 * config.dt - issue_time).abs() < 0.05, "{err} vs {issue_time}");
}

#[test]
fn stale_answer_is_rejected_and_session_continues() {
    let config = session_config(0.0);
    let seed = seed_with_query(&config, 2024);
    let gateway = Gateway::bind("127.0.0.1:0").unwrap();
    let addr = gateway.local_addr().unwrap();
    let client = thread::spawn(move || run_console(addr, Script { send_stale_first: true, ..Script::default() }));
    let outcome = gateway.run(&config, &fast_options(seed)).unwrap();
    let transcript = client.join().unwrap();
    assert!(transcript.errors().contains(&"stale_answer"));
    assert!(outcome.result.decisions.iter().any(|d| d.apply_step.is_some()));
}

#[test]
fn queries_survive_frame_backpressure() {
    let config = session_config(0.1);
    let seed = seed_with_query(&config, 2024);
    let gateway = Gateway::bind("127.0.0.1:0").unwrap();
    let addr = gateway.local_addr().unwrap();
    let script = Script { frame_delay: Duration::from_millis(30), recv_buffer: Some(4096), ..Script::default() };
    let client = thread::spawn(move || run_console(addr, script));
    let options = ServeOptions {
        frame_hz: 100.0,
        frame_queue: 1,
        send_buffer: Some(16 * 1024),
        pace: 1.0,
        ..fast_options(seed)
    };
    let outcome = gateway.run(&config, &options).unwrap();
    let transcript = client.join().unwrap();

    let produced = outcome.frames_sent + outcome.frames_dropped;
    let lost = produced - transcript.frames() as u64;
    let dropped_share = lost as f64 / produced as f64;
    let sent_queries = outcome
        .log
        .iter()
        .filter(|e| matches!(e, LogEntry::Message { message: Message::Query(_), .. }))
        .count();
    let indexes: Vec<u64> = transcript
        .received
        .iter()
        .filter_map(|m| match m {
            Message::Frame(f) => Some(f.index),
            _ => None,
        })
        .collect();
    assert!(indexes.windows(2).all(|w| w[0] < w[1]));
    let ok = sent_queries > 0 && transcript.queries().len() == sent_queries && dropped_share >= 0.5;
    report(&format!(
        "backpressure: {} ({sent_queries} queries sent, {} received; {lost}/{produced} frames dropped)",
        if ok { "PASS" } else { "FAIL" },
        transcript.queries().len()
    ));
    assert!(ok);
    assert!(matches!(transcript.received.last(), Some(Message::End { .. })));
}

/// Fixed grid shared with console tests: values straddle the threshold.
fn golden_grid() -> RiskGrid {
    let spec = GridSpec::new((-2.0, -1.0), 0.5, 4, 3).unwrap();
    let values = vec![0.0, 0.1, 0.2999, 0.3, 0.30001, 0.5, 0.75, 1.0, 0.29, 0.31, 0.0, 0.999];
    RiskGrid::new(spec, values, 1.5, 3.25).unwrap()
}

#[test]
fn golden_grid_vector() {
    let grid = golden_grid();
    let text = encode_grid(&grid);
    // Frozen payload; the console decodes the same bytes.
    // Built independently from the documented layout: magic, version,
    // u16 width and height, f32 resolution, origin and tau, then
    // round(v * 65535) per cell.
    assert_eq!(text, "TElDTQEEAAMAAAAAPwAAAMAAAIC/AADAPwAAmhnGTM1MzUwAgP+///89SlxPAAC9/w==");
    let back = decode_grid(&text).unwrap();
    let mask = classify(&back, 0.3);
    assert_eq!(
        mask,
        vec![false, false, false, true, true, true, true, true, false, true, false, true]
    );
    assert_eq!(mask, classify(&grid.to_wire_precision(), 0.3));
}
