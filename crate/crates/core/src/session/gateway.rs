//! The live session: a paced simulation on the calling thread and one
//! console connection served by a helper thread. The two exchange messages
//! over channels only; the simulation is the sole owner of world state.

use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use crossbeam_channel::{bounded, select, unbounded, Receiver, RecvTimeoutError, Sender, TrySendError};

use super::log::{Direction, LogEntry, LoggedDecision, SessionLog};
use super::protocol::{
    encode_grid, read_message, write_message, EgoWire, FrameMsg, GridWire, Message, ObstacleWire, QueryMsg,
    PROTOCOL_VERSION,
};
use crate::licom::{compute_licom, EgoTemplate, GridSpec, LicomConfig};
use crate::rng::{derive_seed, stream, tag};
use crate::scenario::{
    build_scenario, DecisionSource, LoopOptions, QueryView, ScenarioConfig, Simulation, SourcedAnswer, TrialResult,
};
use crate::vqa::{parse_answer, VisualQuery};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ServeOptions {
    /// Simulation seconds per wall-clock second; 1 is real time.
    pub pace: f64,
    /// Scene seed.
    pub seed: u64,
    pub frame_hz: f64,
    /// Frames buffered for a slow console before new ones are dropped.
    pub frame_queue: usize,
    /// Kernel send buffer of the console socket, bytes. Small buffers keep
    /// a slow console close to live at the cost of dropped frames; `None`
    /// leaves the system default.
    pub send_buffer: Option<usize>,
    pub log_path: Option<PathBuf>,
    /// Latencies of the what-if grids sent with each query, seconds.
    pub sweep_taus: Vec<f64>,
    /// Side length of the square risk grid around the ego, meters.
    pub grid_extent: f64,
    pub grid_resolution: f64,
    /// Give up when no console arrives within this time while the
    /// simulation is held.
    pub hold_timeout: Option<Duration>,
}

impl Default for ServeOptions {
    fn default() -> Self {
        Self {
            pace: 1.0,
            seed: 0,
            frame_hz: 20.0,
            frame_queue: 4,
            send_buffer: Some(64 * 1024),
            log_path: None,
            sweep_taus: vec![0.5, 1.0, 1.5, 2.0, 2.5],
            grid_extent: 40.0,
            grid_resolution: 1.0,
            hold_timeout: None,
        }
    }
}

impl ServeOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.pace > 0.0 && self.pace.is_finite()) {
            return Err(Error::InvalidInput(format!("pace must be positive, got {}", self.pace)));
        }
        if !(self.frame_hz > 0.0) || self.frame_queue == 0 {
            return Err(Error::InvalidInput("frame rate and queue must be positive".into()));
        }
        if self.sweep_taus.iter().any(|t| !(*t >= 0.0)) {
            return Err(Error::InvalidInput("sweep latencies must be >= 0".into()));
        }
        Ok(())
    }
}

/// What a finished session produced.
#[derive(Debug, Clone)]
pub struct SessionOutcome {
    pub result: TrialResult,
    pub log: Vec<LogEntry>,
    /// Frames handed to the connection thread.
    pub frames_sent: u64,
    /// Frames that reached the socket.
    pub frames_written: u64,
    /// Frames discarded because the console fell behind.
    pub frames_dropped: u64,
    /// `(query id, human seconds, network seconds)` per accepted answer.
    pub latencies: Vec<(u64, f64, f64)>,
}

enum Inbound {
    Connected,
    Message(Message),
    Disconnected,
}

/// Answers arrive from the console through the gateway.
#[derive(Default)]
struct LiveSource {
    opened: Vec<VisualQuery>,
    pending: Option<SourcedAnswer>,
}

impl DecisionSource for LiveSource {
    fn on_query(&mut self, query: &VisualQuery, _: &QueryView<'_>) -> Result<()> {
        self.opened.push(query.clone());
        Ok(())
    }

    fn poll_answer(&mut self, query: &VisualQuery, _: u64, _: f64) -> Result<Option<SourcedAnswer>> {
        if self.pending.as_ref().is_some_and(|p| p.answer.query_id == query.id) {
            Ok(self.pending.take())
        } else {
            Ok(None)
        }
    }
}

/// Keeps simulation time in step with the wall clock.
struct Pacer {
    pace: f64,
    wall: Instant,
    sim: f64,
}

impl Pacer {
    fn new(pace: f64, sim: f64) -> Self {
        Self { pace, wall: Instant::now(), sim }
    }

    fn rebase(&mut self, sim: f64) {
        self.wall = Instant::now();
        self.sim = sim;
    }

    fn wait_until(&self, sim: f64) {
        let target = self.wall + Duration::from_secs_f64(((sim - self.sim) / self.pace).max(0.0));
        let now = Instant::now();
        if target > now {
            thread::sleep(target - now);
        }
    }
}

pub struct Gateway {
    listener: TcpListener,
}

impl Gateway {
    pub fn bind<A: ToSocketAddrs>(addr: A) -> Result<Self> {
        Ok(Self { listener: TcpListener::bind(addr)? })
    }

    pub fn local_addr(&self) -> Result<SocketAddr> {
        Ok(self.listener.local_addr()?)
    }

    /// Runs one session to completion.
    pub fn run(self, config: &ScenarioConfig, options: &ServeOptions) -> Result<SessionOutcome> {
        config.validate()?;
        options.validate()?;
        let (control_tx, control_rx) = unbounded::<Message>();
        let (frame_tx, frame_rx) = bounded::<Message>(options.frame_queue);
        let (inbound_tx, inbound_rx) = unbounded::<Inbound>();
        let done = Arc::new(AtomicBool::new(false));
        let frames_written = Arc::new(AtomicU64::new(0));

        self.listener.set_nonblocking(true)?;
        let connection = {
            let done = done.clone();
            let written = frames_written.clone();
            let listener = self.listener;
            let send_buffer = options.send_buffer;
            thread::spawn(move || {
                connection_loop(listener, send_buffer, control_rx, frame_rx, inbound_tx, done, written)
            })
        };

        let outcome = SessionLoop::new(config, options, control_tx, frame_tx).and_then(|s| s.run(&inbound_rx));
        done.store(true, Ordering::SeqCst);
        let _ = connection.join();
        let mut outcome = outcome?;
        outcome.frames_written = frames_written.load(Ordering::Relaxed);
        Ok(outcome)
    }
}

/// Binds `addr` and runs one session.
pub fn serve<A: ToSocketAddrs>(addr: A, config: &ScenarioConfig, options: &ServeOptions) -> Result<SessionOutcome> {
    Gateway::bind(addr)?.run(config, options)
}

fn connection_loop(
    listener: TcpListener,
    send_buffer: Option<usize>,
    control: Receiver<Message>,
    frames: Receiver<Message>,
    inbound: Sender<Inbound>,
    done: Arc<AtomicBool>,
    written: Arc<AtomicU64>,
) {
    while !done.load(Ordering::SeqCst) || !control.is_empty() {
        let stream = match listener.accept() {
            Ok((s, _)) => s,
            Err(e) if e.kind() == std::io::ErrorKind::WouldBlock => {
                if done.load(Ordering::SeqCst) {
                    return;
                }
                thread::sleep(Duration::from_millis(5));
                continue;
            }
            Err(_) => return,
        };
        if stream.set_nonblocking(false).is_err() {
            continue;
        }
        let _ = stream.set_nodelay(true);
        if let Some(size) = send_buffer {
            let _ = socket2::SockRef::from(&stream).set_send_buffer_size(size);
        }
        // Anything queued for a previous connection is stale.
        while control.try_recv().is_ok() {}
        while frames.try_recv().is_ok() {}
        let Ok(read_half) = stream.try_clone() else {
            continue;
        };
        let (closed_tx, closed_rx) = bounded::<()>(1);
        let reader_inbound = inbound.clone();
        let reader = thread::spawn(move || reader_loop(read_half, reader_inbound, closed_tx));
        if inbound.send(Inbound::Connected).is_err() {
            return;
        }
        let finished = writer_loop(&stream, &control, &frames, &closed_rx, &written);
        let _ = stream.shutdown(std::net::Shutdown::Both);
        let _ = reader.join();
        if finished {
            return;
        }
    }
}

fn reader_loop(mut stream: TcpStream, inbound: Sender<Inbound>, closed: Sender<()>) {
    while let Ok(Some(msg)) = read_message(&mut stream) {
        if inbound.send(Inbound::Message(msg)).is_err() {
            break;
        }
    }
    let _ = inbound.send(Inbound::Disconnected);
    let _ = closed.send(());
}

/// Writes until the connection closes or the session ends. Control
/// messages always go before frames. Returns true once `end` is written.
fn writer_loop(
    mut stream: &TcpStream,
    control: &Receiver<Message>,
    frames: &Receiver<Message>,
    closed: &Receiver<()>,
    written: &AtomicU64,
) -> bool {
    loop {
        let msg = match control.try_recv() {
            Ok(m) => m,
            Err(_) => select! {
                recv(control) -> m => match m { Ok(m) => m, Err(_) => return true },
                recv(frames) -> m => match m { Ok(m) => m, Err(_) => continue },
                recv(closed) -> _ => return false,
            },
        };
        let is_end = matches!(msg, Message::End { .. });
        let is_frame = msg.is_droppable();
        if write_message(&mut stream, &msg).is_err() {
            return false;
        }
        if is_frame {
            written.fetch_add(1, Ordering::Relaxed);
        }
        if is_end {
            return true;
        }
    }
}

struct SessionLoop<'a> {
    config: &'a ScenarioConfig,
    options: &'a ServeOptions,
    sim: Simulation,
    source: LiveSource,
    control: Sender<Message>,
    frames: Sender<Message>,
    log: SessionLog,
    connected: bool,
    ever_connected: bool,
    /// The query message currently shown, kept for re-sending.
    shown: Option<QueryMsg>,
    latest_grid: Option<String>,
    /// Query id whose answer was handed to the simulation.
    answer_given: Option<u64>,
    logged_decisions: usize,
    applied_sent: Vec<u64>,
    frame_index: u64,
    frames_enqueued: u64,
    frames_dropped: u64,
    latencies: Vec<(u64, f64, f64)>,
    pending_decision: Option<LoggedDecision>,
}

impl<'a> SessionLoop<'a> {
    fn new(
        config: &'a ScenarioConfig,
        options: &'a ServeOptions,
        control: Sender<Message>,
        frames: Sender<Message>,
    ) -> Result<Self> {
        let scene = build_scenario(config, options.seed)?;
        let sim = Simulation::new(config.clone(), scene, 0, LoopOptions::default());
        let mut log = SessionLog::new(options.log_path.as_deref())?;
        log.record(LogEntry::Start { config: Box::new(config.clone()), seed: options.seed, pace: options.pace })?;
        Ok(Self {
            config,
            options,
            sim,
            source: LiveSource::default(),
            control,
            frames,
            log,
            connected: false,
            ever_connected: false,
            shown: None,
            latest_grid: None,
            answer_given: None,
            logged_decisions: 0,
            applied_sent: Vec::new(),
            frame_index: 0,
            frames_enqueued: 0,
            frames_dropped: 0,
            latencies: Vec::new(),
            pending_decision: None,
        })
    }

    fn send(&mut self, msg: Message) -> Result<()> {
        self.log.record(LogEntry::Message {
            direction: Direction::Sent,
            step: self.sim.step_index(),
            message: msg.clone(),
        })?;
        // A closed channel means the connection thread is gone; the loop
        // notices through the inbound side.
        let _ = self.control.send(msg);
        Ok(())
    }

    fn run(mut self, inbound: &Receiver<Inbound>) -> Result<SessionOutcome> {
        let dt = self.config.dt;
        let frame_every = ((1.0 / (self.options.frame_hz * dt)).round() as u64).max(1);
        let mut pacer = Pacer::new(self.options.pace, self.sim.time());
        let mut held_since: Option<Instant> = None;
        while !self.sim.is_finished() {
            while let Ok(ev) = inbound.try_recv() {
                self.handle(ev)?;
            }
            let hold = !self.connected && (self.ever_connected || self.sim.awaiting_answer());
            if hold {
                let since = *held_since.get_or_insert_with(Instant::now);
                if let Some(limit) = self.options.hold_timeout {
                    if since.elapsed() >= limit {
                        self.log.flush()?;
                        return Err(Error::Protocol(format!(
                            "no console connected; simulation held at step {}",
                            self.sim.step_index()
                        )));
                    }
                }
                match inbound.recv_timeout(Duration::from_millis(20)) {
                    Ok(ev) => self.handle(ev)?,
                    Err(RecvTimeoutError::Timeout) => {}
                    Err(RecvTimeoutError::Disconnected) => return Err(Error::Protocol("connection thread ended".into())),
                }
                pacer.rebase(self.sim.time());
                continue;
            }
            held_since = None;

            pacer.wait_until(self.sim.time());
            let step = self.sim.step_index();
            self.sim.step(&mut self.source)?;
            self.after_step(step)?;
            if !self.source.opened.is_empty() {
                // Grids are computed with the clock stopped so the console
                // sees the question at its simulation time.
                let opened = std::mem::take(&mut self.source.opened);
                for q in opened {
                    self.present(&q)?;
                }
                pacer.rebase(self.sim.time());
            }
            if step.is_multiple_of(frame_every) {
                self.send_frame()?;
            }
        }
        let end_step = self.sim.step_index();
        let result = self.sim.into_result();
        let end = Message::End { result: (&result).into() };
        self.log.record(LogEntry::Message { direction: Direction::Sent, step: end_step, message: end.clone() })?;
        let _ = self.control.send(end);
        self.log.flush()?;
        Ok(SessionOutcome {
            result,
            log: self.log.entries().to_vec(),
            frames_sent: self.frames_enqueued,
            frames_written: 0,
            frames_dropped: self.frames_dropped,
            latencies: self.latencies,
        })
    }

    fn handle(&mut self, ev: Inbound) -> Result<()> {
        match ev {
            Inbound::Connected => {
                self.connected = true;
                self.ever_connected = true;
                self.send(Message::Hello { version: PROTOCOL_VERSION })?;
                if self.sim.awaiting_answer() && self.answer_given.is_none() {
                    if let Some(q) = self.shown.clone() {
                        self.send(Message::Query(q))?;
                    }
                }
            }
            Inbound::Disconnected => self.connected = false,
            Inbound::Message(msg) => {
                self.log.record(LogEntry::Message {
                    direction: Direction::Received,
                    step: self.sim.step_index(),
                    message: msg.clone(),
                })?;
                match msg {
                    Message::Answer(answer) => self.take_answer(answer)?,
                    Message::Hello { version } if version != PROTOCOL_VERSION => {
                        self.send(Message::error("version", format!("expected protocol {PROTOCOL_VERSION}, got {version}")))?
                    }
                    Message::Hello { .. } => {}
                    other => self.send(Message::error("unexpected", format!("console may not send {other:?}")))?,
                }
            }
        }
        Ok(())
    }

    fn take_answer(&mut self, answer: crate::vqa::OperatorAnswer) -> Result<()> {
        let open = self.sim.open_query().filter(|q| self.sim.awaiting_answer() && self.answer_given != Some(q.id));
        let Some(query) = open.cloned() else {
            return self.send(Message::error("stale_answer", format!("query {} is not open", answer.query_id)));
        };
        if query.id != answer.query_id {
            return self.send(Message::error("stale_answer", format!("query {} is not open", answer.query_id)));
        }
        let presented_at = query.issue_time;
        if !(answer.answered_at.is_finite() && answer.answered_at >= presented_at) {
            return self.send(Message::error(
                "invalid_answer",
                format!("answered_at {} precedes presented_at {presented_at}", answer.answered_at),
            ));
        }
        if let Err(e) = parse_answer(&query, &self.config.template(), &answer) {
            return self.send(Message::error("invalid_answer", e.to_string()));
        }
        let human = answer.answered_at - presented_at;
        let network = self.config.latency.network.draw(&mut stream(self.options.seed, &[tag::LATENCY, query.id]));
        self.pending_decision = Some(LoggedDecision {
            answer: answer.clone(),
            presented_at,
            human_latency: human,
            network_latency: network,
            received_step: 0,
            apply_step: None,
        });
        self.source.pending = Some(SourcedAnswer {
            answer,
            human_latency: human,
            network_latency: network,
            perceived: None,
            apply_step: None,
        });
        self.answer_given = Some(query.id);
        Ok(())
    }

    fn after_step(&mut self, step: u64) -> Result<()> {
        let decisions = self.sim.decisions().to_vec();
        if let Some(mut pending) = self.pending_decision.take() {
            match decisions.iter().find(|d| d.query_id == pending.answer.query_id && d.action.is_some()) {
                Some(rec) => {
                    pending.received_step = step;
                    pending.apply_step = rec.apply_step;
                    self.latencies.push((rec.query_id, pending.human_latency, pending.network_latency));
                    self.log.record(LogEntry::Decision(pending))?;
                    self.logged_decisions += 1;
                    if rec.apply_step.is_none() {
                        self.send(Message::error("rejected", format!("{:?}", rec.feasibility)))?;
                        self.answer_given = None;
                    }
                }
                None => self.pending_decision = Some(pending),
            }
        }
        for d in &decisions {
            if let (Some(apply_step), Some(apply_at)) = (d.apply_step, d.apply_at) {
                if apply_step <= step && !self.applied_sent.contains(&d.query_id) {
                    self.applied_sent.push(d.query_id);
                    self.send(Message::Applied { id: d.query_id, apply_at })?;
                    if self.answer_given == Some(d.query_id) {
                        self.answer_given = None;
                        self.shown = None;
                        self.latest_grid = None;
                    }
                }
            }
        }
        Ok(())
    }

    fn present(&mut self, query: &VisualQuery) -> Result<()> {
        let expected = self.config.latency.mean();
        let mut grids = Vec::new();
        let mut taus = self.options.sweep_taus.clone();
        if !taus.iter().any(|t| (t - expected).abs() < 1e-9) {
            taus.push(expected);
        }
        if let Some(track) = self.sim.track() {
            let ego = *self.sim.ego();
            let spec = GridSpec::centered(ego.pose.x, ego.pose.y, self.options.grid_extent, self.options.grid_resolution)?;
            let cfg = LicomConfig { safety: self.config.safety.with_budget(20, 10), pruning: true };
            for (i, &tau) in taus.iter().enumerate() {
                let heading = self.sim.scene.reference.pose_clamped(ego.time + tau).0.theta;
                let grid = compute_licom(
                    &spec,
                    &EgoTemplate { heading, extents: self.config.ego_extents },
                    Some(&track),
                    tau,
                    ego.time,
                    &cfg,
                    derive_seed(self.options.seed, &[tag::OVERLAY, query.id, i as u64]),
                )?;
                let encoded = encode_grid(&grid);
                if (tau - expected).abs() < 1e-9 {
                    self.latest_grid = Some(encoded.clone());
                }
                grids.push(GridWire { tau, grid: encoded });
            }
        }
        let msg = QueryMsg {
            id: query.id,
            text: query.text.clone(),
            options: query.options.clone(),
            presented_at: query.issue_time,
            allow_waypoint: query.allow_waypoint,
            grids,
            expected_latency: expected,
        };
        self.shown = Some(msg.clone());
        if self.connected {
            self.send(Message::Query(msg))?;
        }
        Ok(())
    }

    fn send_frame(&mut self) -> Result<()> {
        let view = self.sim.view();
        let reference = &self.sim.scene.reference;
        let trajectory = (0..=20)
            .map(|k| {
                let (p, _) = reference.pose_clamped(view.time + 0.1 * k as f64);
                [p.x, p.y, p.theta]
            })
            .collect();
        let frame = Message::Frame(FrameMsg {
            index: self.frame_index,
            time: view.time,
            ego: EgoWire::from(&view.ego),
            obstacles: view.obstacles.iter().map(ObstacleWire::from).collect(),
            trajectory,
            grid: if self.sim.open_query().is_some() { self.latest_grid.clone() } else { None },
        });
        self.frame_index += 1;
        if !self.connected {
            return Ok(());
        }
        match self.frames.try_send(frame) {
            Ok(()) => self.frames_enqueued += 1,
            Err(TrySendError::Full(_)) => self.frames_dropped += 1,
            Err(TrySendError::Disconnected(_)) => {}
        }
        Ok(())
    }
}
