//! Live sessions: one paced control thread per session.

use std::io::Write;
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::mpsc::{sync_channel, Receiver, RecvTimeoutError, SyncSender, TrySendError};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use framewright_core::scene::CameraIntrinsics;
use framewright_core::session::{
    save_trace, Pipeline, PipelineConfig, SessionTrace, StudioLayout, TraceHeader, TraceLine, TraceRecord,
};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use tokio::sync::oneshot;
use tracing::{debug, info, warn};

use crate::protocol::{
    ControlAction, CueAck, Diagnostics, ErrorCode, Inbound, Outbound, SessionState, WireMessage,
};
use crate::queue::Delivery;
use crate::stream::StreamCore;

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("unknown session {0}")]
    UnknownSession(String),
    #[error("cannot {action:?} a session that is {from:?}")]
    InvalidTransition { from: SessionState, action: ControlAction },
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("malformed request: {0}")]
    Malformed(String),
    #[error("session inbox is full")]
    Busy,
    #[error("session has stopped")]
    Closed,
}

impl ServiceError {
    pub fn code(&self) -> ErrorCode {
        match self {
            ServiceError::UnknownSession(_) | ServiceError::Closed => ErrorCode::UnknownSession,
            ServiceError::InvalidTransition { .. } => ErrorCode::InvalidTransition,
            ServiceError::InvalidConfig(_) => ErrorCode::InvalidConfig,
            ServiceError::Malformed(_) => ErrorCode::MalformedPayload,
            ServiceError::Busy => ErrorCode::Busy,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ServiceOptions {
    /// Session seconds per wall-clock second.
    pub time_scale: f64,
    /// Outbound messages buffered per subscriber before telemetry is dropped.
    pub queue_capacity: usize,
    /// Inbound messages buffered per session.
    pub inbox_capacity: usize,
    /// Where session traces are written; `None` keeps them in memory only.
    pub trace_dir: Option<PathBuf>,
}

impl Default for ServiceOptions {
    fn default() -> Self {
        Self {
            time_scale: 1.0,
            queue_capacity: 256,
            inbox_capacity: 1024,
            trace_dir: None,
        }
    }
}

impl ServiceOptions {
    /// Reads `STUDIO_TIME_SCALE`, `STUDIO_QUEUE_CAPACITY` and `STUDIO_TRACE_DIR`.
    pub fn from_env() -> Result<Self, String> {
        let mut o = Self::default();
        if let Ok(v) = std::env::var("STUDIO_TIME_SCALE") {
            o.time_scale = v.parse().map_err(|e| format!("STUDIO_TIME_SCALE: {e}"))?;
        }
        if let Ok(v) = std::env::var("STUDIO_QUEUE_CAPACITY") {
            o.queue_capacity = v.parse().map_err(|e| format!("STUDIO_QUEUE_CAPACITY: {e}"))?;
        }
        if let Ok(v) = std::env::var("STUDIO_TRACE_DIR") {
            o.trace_dir = Some(v.into());
        }
        if !(o.time_scale > 0.0 && o.time_scale.is_finite()) {
            return Err("STUDIO_TIME_SCALE must be positive".into());
        }
        Ok(o)
    }
}

/// Body of `POST /sessions`. Every field is optional.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct SessionSpec {
    /// JSON merge patch on the default pipeline config.
    pub overrides: Value,
    pub layout: Option<StudioLayout>,
    pub intrinsics: Option<CameraIntrinsics<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionStatus {
    pub session_id: String,
    pub state: SessionState,
    /// Next tick to plan.
    pub tick: u64,
    /// Servo clock, seconds.
    pub time: f64,
    pub subscribers: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace_path: Option<PathBuf>,
}

enum Command {
    Ingest {
        origin: u64,
        msg: WireMessage,
    },
    Control {
        action: ControlAction,
        reply: oneshot::Sender<Result<SessionState, ServiceError>>,
    },
    Subscribe {
        id: u64,
        queue: Arc<Delivery>,
        reply: oneshot::Sender<()>,
    },
    Unsubscribe(u64),
    Trace(oneshot::Sender<SessionTrace>),
}

/// Client-side handle to a running control thread.
pub struct SessionHandle {
    id: String,
    tx: SyncSender<Command>,
    status: Arc<Mutex<SessionStatus>>,
    next_subscriber: AtomicU64,
    queue_capacity: usize,
    alive: Arc<AtomicBool>,
    thread: Mutex<Option<JoinHandle<()>>>,
}

impl std::fmt::Debug for SessionHandle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SessionHandle").field("id", &self.id).finish_non_exhaustive()
    }
}

impl SessionHandle {
    /// Builds the pipeline and starts the control thread in `Idle`.
    pub fn start(id: String, spec: SessionSpec, options: &ServiceOptions) -> Result<Self, ServiceError> {
        let defaults = PipelineConfig::default();
        let mut header = TraceHeader::new(
            spec.intrinsics.unwrap_or(defaults.planner.intrinsics),
            spec.layout.unwrap_or_default(),
        );
        header.overrides = spec.overrides;
        let pipeline =
            Pipeline::for_trace(&defaults, &header).map_err(|e| ServiceError::InvalidConfig(e.to_string()))?;

        let trace_path = options.trace_dir.as_ref().map(|d| d.join(format!("{id}.trace.jsonl")));
        let writer = match &trace_path {
            Some(path) => Some(TraceFile::create(path.clone(), &header).map_err(|e| {
                ServiceError::InvalidConfig(format!("cannot write trace {}: {e}", path.display()))
            })?),
            None => None,
        };

        let status = Arc::new(Mutex::new(SessionStatus {
            session_id: id.clone(),
            state: SessionState::Idle,
            tick: 0,
            time: 0.0,
            subscribers: 0,
            trace_path,
        }));
        let (tx, rx) = sync_channel(options.inbox_capacity.max(1));
        let alive = Arc::new(AtomicBool::new(true));
        let live = Live {
            alive: alive.clone(),
            id: id.clone(),
            core: StreamCore::new(pipeline),
            state: SessionState::Idle,
            subscribers: Vec::new(),
            inbox: Vec::new(),
            last_seq: None,
            trace: SessionTrace {
                header,
                records: Vec::new(),
            },
            writer,
            time_scale: options.time_scale,
            due: None,
            stopping: false,
            status: status.clone(),
        };
        let thread = std::thread::Builder::new()
            .name(format!("session-{id}"))
            .spawn(move || live.run(rx))
            .map_err(|e| ServiceError::InvalidConfig(format!("cannot spawn control thread: {e}")))?;
        info!(session_id = %id, "session created");
        Ok(Self {
            id,
            tx,
            status,
            next_subscriber: AtomicU64::new(1),
            queue_capacity: options.queue_capacity,
            alive,
            thread: Mutex::new(Some(thread)),
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    /// False once the control thread has stopped.
    pub fn is_alive(&self) -> bool {
        self.alive.load(Ordering::Acquire)
    }

    pub fn status(&self) -> SessionStatus {
        self.status.lock().expect("status lock").clone()
    }

    fn send(&self, cmd: Command) -> Result<(), ServiceError> {
        self.tx.try_send(cmd).map_err(|e| match e {
            TrySendError::Full(_) => ServiceError::Busy,
            TrySendError::Disconnected(_) => ServiceError::Closed,
        })
    }

    pub async fn control(&self, action: ControlAction) -> Result<SessionState, ServiceError> {
        let (reply, rx) = oneshot::channel();
        self.send(Command::Control { action, reply })?;
        rx.await.map_err(|_| ServiceError::Closed)?
    }

    /// Registers a subscriber. Its queue already holds the current snapshot
    /// (and latest rig state, if any) when this returns.
    pub async fn subscribe(&self) -> Result<(u64, Arc<Delivery>), ServiceError> {
        let id = self.next_subscriber.fetch_add(1, Ordering::Relaxed);
        let queue = Arc::new(Delivery::new(self.id.clone(), self.queue_capacity));
        let (reply, rx) = oneshot::channel();
        self.send(Command::Subscribe {
            id,
            queue: queue.clone(),
            reply,
        })?;
        rx.await.map_err(|_| ServiceError::Closed)?;
        Ok((id, queue))
    }

    pub fn unsubscribe(&self, id: u64) {
        let _ = self.tx.try_send(Command::Unsubscribe(id));
    }

    /// Queues a client message; never blocks. Replies go to subscriber
    /// `origin`'s queue.
    pub fn ingest(&self, origin: u64, msg: WireMessage) -> Result<(), ServiceError> {
        self.send(Command::Ingest { origin, msg })
    }

    /// Trace recorded so far, with its duration set to the last planned tick.
    pub async fn trace(&self) -> Result<SessionTrace, ServiceError> {
        let (reply, rx) = oneshot::channel();
        self.send(Command::Trace(reply))?;
        rx.await.map_err(|_| ServiceError::Closed)
    }

    /// Waits for the control thread to exit (after `Stop`).
    pub fn join(&self) {
        if let Some(t) = self.thread.lock().expect("thread lock").take() {
            let _ = t.join();
        }
    }
}

/// Append-only trace file, rewritten with the final header on close.
struct TraceFile {
    path: PathBuf,
    out: std::io::BufWriter<std::fs::File>,
}

impl TraceFile {
    fn create(path: PathBuf, header: &TraceHeader) -> std::io::Result<Self> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        let mut out = std::io::BufWriter::new(std::fs::File::create(&path)?);
        serde_json::to_writer(&mut out, header)?;
        out.write_all(b"\n")?;
        out.flush()?;
        Ok(Self { path, out })
    }

    fn append(&mut self, line: &TraceLine) -> std::io::Result<()> {
        serde_json::to_writer(&mut self.out, line)?;
        self.out.write_all(b"\n")
    }
}

struct Pending {
    origin: Option<u64>,
    seq: Option<u64>,
    kind: String,
    record: TraceRecord,
}

struct Live {
    alive: Arc<AtomicBool>,
    id: String,
    core: StreamCore,
    state: SessionState,
    subscribers: Vec<(u64, Arc<Delivery>)>,
    inbox: Vec<Pending>,
    last_seq: Option<u64>,
    trace: SessionTrace,
    writer: Option<TraceFile>,
    time_scale: f64,
    due: Option<Instant>,
    stopping: bool,
    status: Arc<Mutex<SessionStatus>>,
}

/// Servo steps the loop may run back to back before it gives up catching up.
const MAX_CATCH_UP: usize = 200;

impl Live {
    fn run(mut self, rx: Receiver<Command>) {
        loop {
            let wait = match (self.state, self.due) {
                (SessionState::Running, Some(d)) => d.saturating_duration_since(Instant::now()),
                _ => Duration::from_secs(3600),
            };
            match rx.recv_timeout(wait) {
                Ok(cmd) => self.handle(cmd),
                Err(RecvTimeoutError::Timeout) => {}
                Err(RecvTimeoutError::Disconnected) => break,
            }
            if self.stopping {
                break;
            }
            self.catch_up();
        }
        self.finish();
    }

    fn step_period(&self) -> Duration {
        Duration::from_secs_f64(self.core.pipeline().config().servo.dt / self.time_scale)
    }

    fn catch_up(&mut self) {
        if self.state != SessionState::Running {
            return;
        }
        let now = Instant::now();
        let mut due = self.due.unwrap_or(now);
        let mut steps = 0;
        while due <= now {
            self.advance();
            due += self.step_period();
            steps += 1;
            if steps >= MAX_CATCH_UP {
                warn!(session_id = %self.id, "control loop fell behind; skipping ahead");
                due = now + self.step_period();
                break;
            }
        }
        self.due = Some(due);
    }

    /// One servo period, preceded by a tick boundary when the previous tick
    /// is complete.
    fn advance(&mut self) {
        let mut out = Vec::new();
        if self.core.pipeline().substeps_left() == 0 {
            self.drain_inbox();
            self.core.plan_tick(&mut out);
        }
        self.core.servo_step(&mut out);
        self.broadcast(out);
        self.update_status();
    }

    /// Applies buffered inputs at the current tick boundary, in arrival order.
    fn drain_inbox(&mut self) {
        let tick = self.core.pipeline().tick_index();
        for p in std::mem::take(&mut self.inbox) {
            match self.core.apply(&p.record) {
                Ok(cues) => {
                    self.record(tick, p.record);
                    if let (Some(origin), Some(seq)) = (p.origin, p.seq) {
                        self.send_to(
                            origin,
                            Outbound::CueAck(CueAck {
                                ack_seq: seq,
                                ack_kind: p.kind,
                                tick,
                                cues,
                            }),
                        );
                    }
                }
                Err(e) => {
                    let code = if matches!(p.record, TraceRecord::ConfigPatch { .. }) {
                        ErrorCode::InvalidConfig
                    } else {
                        ErrorCode::MalformedPayload
                    };
                    debug!(session_id = %self.id, error = %e, "input rejected");
                    if let Some(origin) = p.origin {
                        self.send_to(origin, Outbound::Diagnostics(Diagnostics::error(code, e.to_string(), p.seq)));
                    }
                }
            }
        }
        if let Some(w) = &mut self.writer {
            if let Err(e) = w.out.flush() {
                warn!(session_id = %self.id, error = %e, "trace flush failed");
            }
        }
    }

    fn record(&mut self, tick: u64, record: TraceRecord) {
        let line = TraceLine {
            tick: Some(tick),
            record,
        };
        if let Some(w) = &mut self.writer {
            if let Err(e) = w.append(&line) {
                warn!(session_id = %self.id, error = %e, "trace write failed");
            }
        }
        self.trace.records.push(line);
    }

    fn now(&self) -> f64 {
        self.core.pipeline().servo_time()
    }

    fn broadcast(&self, out: Vec<Outbound>) {
        let t = self.now();
        for msg in out {
            for (_, q) in &self.subscribers {
                q.push(msg.clone(), t);
            }
        }
    }

    fn send_to(&self, origin: u64, msg: Outbound) {
        if let Some((_, q)) = self.subscribers.iter().find(|(id, _)| *id == origin) {
            q.push(msg, self.now());
        }
    }

    fn update_status(&self) {
        let mut s = self.status.lock().expect("status lock");
        s.state = self.state;
        s.tick = self.core.pipeline().tick_index();
        s.time = self.now();
        s.subscribers = self.subscribers.len();
    }

    fn handle(&mut self, cmd: Command) {
        match cmd {
            Command::Ingest { origin, msg } => self.ingest(origin, msg),
            Command::Control { action, reply } => {
                let r = self.control(action);
                let _ = reply.send(r);
            }
            Command::Subscribe { id, queue, reply } => {
                let t = self.now();
                queue.push(Outbound::DirectorSnapshot(self.core.snapshot()), t);
                if let Some(rig) = self.core.last_rig() {
                    queue.push(Outbound::RigState(*rig), t);
                }
                self.subscribers.push((id, queue));
                self.update_status();
                let _ = reply.send(());
            }
            Command::Unsubscribe(id) => {
                self.subscribers.retain(|(s, q)| {
                    if *s == id {
                        q.close();
                    }
                    *s != id
                });
                self.update_status();
            }
            Command::Trace(reply) => {
                let _ = reply.send(self.final_trace());
            }
        }
    }

    fn ingest(&mut self, origin: u64, msg: WireMessage) {
        let reject = |this: &Self, code: ErrorCode, message: String| {
            debug!(session_id = %this.id, seq = msg.seq, ?code, "message rejected");
            this.send_to(origin, Outbound::Diagnostics(Diagnostics::error(code, message, Some(msg.seq))));
        };
        if msg.session_id != self.id {
            return reject(self, ErrorCode::UnknownSession, format!("this stream is session {}", self.id));
        }
        if let Some(last) = self.last_seq {
            if msg.seq <= last {
                return reject(self, ErrorCode::StaleSeq, format!("seq {} after {last}", msg.seq));
            }
        }
        let parsed = match Inbound::parse(&msg) {
            Ok(p) => p,
            Err(e) => return reject(self, ErrorCode::MalformedPayload, e),
        };
        let t = msg.timestamp;
        let record = match parsed {
            Inbound::SessionControl(c) => {
                self.last_seq = Some(msg.seq);
                match self.control(c.action) {
                    Ok(_) => self.send_to(
                        origin,
                        Outbound::CueAck(CueAck {
                            ack_seq: msg.seq,
                            ack_kind: msg.kind.clone(),
                            tick: self.core.pipeline().tick_index(),
                            cues: Vec::new(),
                        }),
                    ),
                    Err(e) => reject(self, e.code(), e.to_string()),
                }
                return;
            }
            Inbound::SkeletonFrame(f) => TraceRecord::Skeleton(f),
            Inbound::HandKeypoints(h) => TraceRecord::Hand(h),
            Inbound::Utterance(u) => TraceRecord::Utterance {
                timestamp: t,
                text: u.text,
            },
            Inbound::InjectedCue(c) => TraceRecord::Cue(c),
            Inbound::ConfigPatch(patch) => TraceRecord::ConfigPatch { timestamp: t, patch },
        };
        if self.state != SessionState::Running {
            return reject(self, ErrorCode::NotRunning, format!("session is {:?}", self.state));
        }
        self.last_seq = Some(msg.seq);
        self.inbox.push(Pending {
            origin: Some(origin),
            seq: Some(msg.seq),
            kind: msg.kind,
            record,
        });
    }

    /// Runs the owed servo steps at once so the session rests on a tick
    /// boundary.
    fn settle_on_boundary(&mut self) {
        let mut out = Vec::new();
        self.core.finish_tick(&mut out);
        self.broadcast(out);
    }

    fn control(&mut self, action: ControlAction) -> Result<SessionState, ServiceError> {
        use ControlAction::*;
        use SessionState::*;
        let from = self.state;
        match (from, action) {
            (_, Stop) => self.stopping = true,
            (Idle | Paused, Run) => {
                self.state = Running;
                self.due = Some(Instant::now());
            }
            (Running, Pause) => {
                self.settle_on_boundary();
                self.state = Paused;
                self.due = None;
            }
            (_, Reset) => {
                self.settle_on_boundary();
                self.inbox.push(Pending {
                    origin: None,
                    seq: None,
                    kind: "Reset".into(),
                    record: TraceRecord::Reset { timestamp: self.now() },
                });
                self.drain_inbox();
                // A running session publishes after the next plan.
                if self.state != Running {
                    let mut out = Vec::new();
                    self.core.publish_if_changed(&mut out);
                    self.broadcast(out);
                }
            }
            (Running, Run) | (Idle | Paused, Pause) => return Err(ServiceError::InvalidTransition { from, action }),
        }
        info!(session_id = %self.id, ?action, ?from, to = ?self.state, "control");
        self.update_status();
        Ok(self.state)
    }

    fn final_trace(&self) -> SessionTrace {
        let p = self.core.pipeline();
        let planned = p.tick_index() + u64::from(p.substeps_left() > 0);
        let mut trace = self.trace.clone();
        trace.header.duration = planned.checked_sub(1).map(|k| k as f64 * p.config().tick_period());
        trace
    }

    fn finish(mut self) {
        self.settle_on_boundary();
        if let Some(w) = self.writer.take() {
            let path = w.path.clone();
            drop(w);
            if let Err(e) = save_trace(&self.final_trace(), &path) {
                warn!(session_id = %self.id, error = %e, "final trace write failed");
            }
        }
        self.alive.store(false, Ordering::Release);
        for (_, q) in &self.subscribers {
            q.close();
        }
        info!(session_id = %self.id, ticks = self.core.pipeline().tick_index(), "session stopped");
    }
}
