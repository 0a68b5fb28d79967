#![allow(dead_code)]

use std::net::{SocketAddr, TcpStream};
use std::thread;
use std::time::{Duration, Instant};

use socket2::{Domain, Protocol, Socket, Type};

use nalgebra::{Matrix3, Vector3};

use latency_risk::geometry::{Extents, ObstacleState, Pose2};
use latency_risk::licom::{compute_licom, EgoTemplate, GridSpec, LicomConfig, RiskGrid};
use latency_risk::licp::SafetyConfig;
use latency_risk::prediction::{MixtureBelief, MotionModel, ObstacleTrack};
use latency_risk::scenario::{run_trial, trial_seed, ScenarioConfig};
use latency_risk::session::{read_message, write_message, Message, QueryMsg};
use latency_risk::vqa::OperatorAnswer;

/// Prints one line that shows up even when test output is captured.
pub fn report(line: &str) {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{line}");
    let _ = out.flush();
}

/// How a scripted console behaves.
#[derive(Clone)]
pub struct Script {
    /// Simulation seconds added to `presented_at`.
    pub reaction: f64,
    /// Answer with the first option (proceed) when true, else the second.
    pub proceed: bool,
    /// Wall time spent on every frame before reading the next message.
    pub frame_delay: Duration,
    /// Send an answer for an unknown query before the real one.
    pub send_stale_first: bool,
    /// Close the socket on the first query instead of answering.
    pub hang_up_on_query: bool,
    /// Kernel receive buffer to request, bytes.
    pub recv_buffer: Option<usize>,
}

impl Default for Script {
    fn default() -> Self {
        Self {
            reaction: 0.25,
            proceed: true,
            frame_delay: Duration::ZERO,
            send_stale_first: false,
            hang_up_on_query: false,
            recv_buffer: None,
        }
    }
}

#[derive(Debug, Default)]
pub struct Transcript {
    pub received: Vec<Message>,
    pub answered: Vec<OperatorAnswer>,
}

impl Transcript {
    pub fn queries(&self) -> Vec<&QueryMsg> {
        self.received
            .iter()
            .filter_map(|m| match m {
                Message::Query(q) => Some(q),
                _ => None,
            })
            .collect()
    }

    pub fn frames(&self) -> usize {
        self.received.iter().filter(|m| matches!(m, Message::Frame(_))).count()
    }

    pub fn errors(&self) -> Vec<&str> {
        self.received
            .iter()
            .filter_map(|m| match m {
                Message::Error { code, .. } => Some(code.as_str()),
                _ => None,
            })
            .collect()
    }
}

pub fn connect(addr: SocketAddr, recv_buffer: Option<usize>) -> TcpStream {
    let deadline = Instant::now() + Duration::from_secs(10);
    loop {
        let socket = Socket::new(Domain::for_address(addr), Type::STREAM, Some(Protocol::TCP)).unwrap();
        if let Some(size) = recv_buffer {
            socket.set_recv_buffer_size(size).unwrap();
        }
        match socket.connect(&addr.into()) {
            Ok(()) => return socket.into(),
            Err(_) if Instant::now() < deadline => thread::sleep(Duration::from_millis(10)),
            Err(e) => panic!("could not connect to {addr}: {e}"),
        }
    }
}

/// Plays `script` against the gateway at `addr` until the session ends.
pub fn run_console(addr: SocketAddr, script: Script) -> Transcript {
    let mut stream = connect(addr, script.recv_buffer);
    let mut writer = stream.try_clone().unwrap();
    let mut t = Transcript::default();
    let mut answered = std::collections::HashSet::new();
    while let Ok(Some(msg)) = read_message(&mut stream) {
        let end = matches!(msg, Message::End { .. });
        match &msg {
            Message::Frame(_) if !script.frame_delay.is_zero() => thread::sleep(script.frame_delay),
            Message::Query(q) if script.hang_up_on_query => {
                t.received.push(Message::Query(q.clone()));
                return t;
            }
            Message::Query(q) if answered.insert(q.id) => {
                if script.send_stale_first {
                    let stale = OperatorAnswer::option(q.id + 100, &q.options[0], q.presented_at);
                    write_message(&mut writer, &Message::Answer(stale)).unwrap();
                }
                let option = if script.proceed { &q.options[0] } else { &q.options[1] };
                let answer = OperatorAnswer::option(q.id, option, q.presented_at + script.reaction);
                write_message(&mut writer, &Message::Answer(answer.clone())).unwrap();
                t.answered.push(answer);
            }
            _ => {}
        }
        t.received.push(msg);
        if end {
            break;
        }
    }
    t
}

/// First trial under `master` whose scene raises a query with the
/// default simulated operator.
pub fn seed_with_query(config: &ScenarioConfig, master: u64) -> u64 {
    (0..50)
        .map(|i| trial_seed(master, i))
        .find(|&s| !run_trial(config, s).unwrap().decisions.is_empty())
        .expect("a scene with a query")
}

pub fn static_track(x: f64, y: f64, theta: f64, cov: Matrix3<f64>, q: Matrix3<f64>) -> ObstacleTrack {
    let pose = Pose2::new(x, y, theta);
    ObstacleTrack {
        observed: ObstacleState { id: 1, pose, velocity: (0.0, 0.0), extents: Extents::default() },
        belief: MixtureBelief::single(pose, cov, 0.0),
        motion: MotionModel::constant_velocity(0.0, 0.0).with_noise(q),
    }
}

/// Risk maps of a static obstacle with an isotropic belief at the origin.
pub fn isotropic_sweep(taus: &[f64]) -> Vec<RiskGrid> {
    let spec = GridSpec::centered(0.0, 0.0, 30.0, 0.5).unwrap();
    let ego = EgoTemplate { heading: 0.0, extents: Extents::default() };
    let cov = Matrix3::from_diagonal(&Vector3::new(0.25, 0.25, 0.005));
    let track = static_track(0.0, 0.0, 0.0, cov, MotionModel::default_process_noise());
    let cfg = LicomConfig { safety: SafetyConfig::default().with_budget(100, 50), pruning: true };
    taus.iter().map(|&tau| compute_licom(&spec, &ego, Some(&track), tau, 0.0, &cfg, 77).unwrap()).collect()
}
