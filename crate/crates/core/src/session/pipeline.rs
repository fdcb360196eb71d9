//! Simulated-time lockstep of cue engine, director, planner and servo, and
//! the recording it produces.

use std::fmt::Write as _;
use std::path::Path;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::config::PipelineConfig;
use super::metrics::{compute_metrics, Metrics, MetricsOptions};
use super::synth::StudioLayout;
use super::trace::{parse_header, SessionTrace, TraceHeader, TraceRecord};
use super::SessionError;
use crate::cue::{CueEngine, CueEvent, SkeletonFrame};
use crate::director::{Director, DirectorState, GoalMode, PlanningGoal, StateKey, StateRecord};
use crate::planner::{orbit_waypoints, plan_next_position, CostBreakdown, OrbitPath, PlanStatus, PlannerConfig, PlanningContext};
use crate::scene::{CameraIntrinsics, CameraPose};
use crate::servo::{CameraRig, RigStatus, ServoEvent, ServoSim};

pub const RECORDING_FORMAT: &str = "framewright-recording";
pub const RECORDING_VERSION: u64 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordingHeader {
    pub format: String,
    pub version: u64,
    /// Effective config at the start of the session.
    pub config: PipelineConfig,
    pub layout: StudioLayout,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanSummary {
    #[serde(flatten)]
    pub status: PlanStatus,
    pub iterations: usize,
    pub evaluations: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cost: Option<CostBreakdown<f64>>,
}

/// One planner tick: the goal, the pose the rig started from and the pose it
/// was sent toward.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TickRecord {
    pub tick: u64,
    pub timestamp: f64,
    pub goal: PlanningGoal,
    pub rig: CameraPose<f64>,
    pub target: CameraPose<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plan: Option<PlanSummary>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TelemetrySample {
    /// Tick whose target the rig was following.
    pub tick: u64,
    pub timestamp: f64,
    pub pose: CameraPose<f64>,
    pub linear_speed: f64,
    pub angular_speed: f64,
    pub status: RigStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum RecordingRecord {
    Tick(TickRecord),
    Telemetry(TelemetrySample),
    Cue { event: CueEvent },
    State(StateRecord),
    Servo { event: ServoEvent<f64> },
    Reset { timestamp: f64 },
    Config { timestamp: f64, patch: serde_json::Value },
    Metrics(Metrics),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionRecording {
    pub header: RecordingHeader,
    pub records: Vec<RecordingRecord>,
    pub metrics: Option<Metrics>,
}

impl SessionRecording {
    pub fn ticks(&self) -> impl Iterator<Item = &TickRecord> {
        self.records.iter().filter_map(|r| match r {
            RecordingRecord::Tick(t) => Some(t),
            _ => None,
        })
    }

    pub fn telemetry(&self) -> impl Iterator<Item = &TelemetrySample> {
        self.records.iter().filter_map(|r| match r {
            RecordingRecord::Telemetry(t) => Some(t),
            _ => None,
        })
    }

    pub fn timeline(&self) -> Vec<StateRecord> {
        self.records
            .iter()
            .filter_map(|r| match r {
                RecordingRecord::State(s) => Some(*s),
                _ => None,
            })
            .collect()
    }

    pub fn cues(&self) -> impl Iterator<Item = &CueEvent> {
        self.records.iter().filter_map(|r| match r {
            RecordingRecord::Cue { event } => Some(event),
            _ => None,
        })
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = serde_json::to_string(&self.header).expect("header serializes");
        out.push('\n');
        let line = |out: &mut String, r: &RecordingRecord| {
            let _ = writeln!(out, "{}", serde_json::to_string(r).expect("record serializes"));
        };
        for r in &self.records {
            line(&mut out, r);
        }
        if let Some(m) = &self.metrics {
            line(&mut out, &RecordingRecord::Metrics(m.clone()));
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Self, SessionError> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let Some((_, first)) = lines.next() else {
            return Err(SessionError::CorruptRecord {
                line: 1,
                reason: "missing header".into(),
            });
        };
        let header = parse_header(first, RECORDING_FORMAT, RECORDING_VERSION)?;
        let mut records = Vec::new();
        let mut metrics = None;
        for (i, line) in lines {
            let rec: RecordingRecord = serde_json::from_str(line).map_err(|e| SessionError::CorruptRecord {
                line: i + 1,
                reason: e.to_string(),
            })?;
            match rec {
                RecordingRecord::Metrics(m) => metrics = Some(m),
                other => records.push(other),
            }
        }
        Ok(Self {
            header,
            records,
            metrics,
        })
    }
}

pub fn save_recording(recording: &SessionRecording, path: impl AsRef<Path>) -> Result<(), SessionError> {
    let path = path.as_ref();
    std::fs::write(path, recording.to_jsonl()).map_err(|e| SessionError::io(path, e))
}

pub fn load_recording(path: impl AsRef<Path>) -> Result<SessionRecording, SessionError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| SessionError::io(path, e))?;
    SessionRecording::from_jsonl(&text)
}

/// Wall-clock cost of planner ticks. Kept out of recordings so they stay
/// byte-deterministic.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TickTiming {
    pub count: u64,
    pub total: Duration,
    pub max: Duration,
}

/// The whole pipeline for one session.
pub struct Pipeline {
    config: PipelineConfig,
    layout: StudioLayout,
    planning: PlannerConfig<f64>,
    cue: CueEngine,
    director: Director,
    servo: ServoSim<f64>,
    target: CameraPose<f64>,
    orbit_path: Option<OrbitPath<f64>>,
    frame: Option<SkeletonFrame>,
    pending: Vec<CueEvent>,
    last_state: Option<StateKey>,
    tick: u64,
    substeps_left: usize,
    timing: TickTiming,
}

impl std::fmt::Debug for Pipeline {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Pipeline")
            .field("tick", &self.tick)
            .field("state", &self.director.state().key())
            .field("rig", &self.servo.rig)
            .finish_non_exhaustive()
    }
}

impl Pipeline {
    /// Pipeline at rest at the neutral pose. The layout and intrinsics take
    /// precedence over the corresponding config fields.
    pub fn new(
        config: PipelineConfig,
        layout: StudioLayout,
        intrinsics: CameraIntrinsics<f64>,
    ) -> Result<Self, SessionError> {
        let config = Self::bind(config, &layout, intrinsics);
        config.validate()?;
        let servo = ServoSim::new(config.servo, config.planner.bounds, layout.rig_base);
        let target = servo.neutral_pose();
        Ok(Self {
            planning: Self::planning_config(&config),
            cue: CueEngine::new(config.cue),
            director: Director::new(config.director, config.planner.orbit, config.planner.intrinsics),
            servo,
            target,
            orbit_path: None,
            frame: None,
            pending: Vec::new(),
            last_state: None,
            tick: 0,
            substeps_left: 0,
            timing: TickTiming::default(),
            layout,
            config,
        })
    }

    /// Pipeline for a trace: header overrides are applied on top of `config`.
    pub fn for_trace(config: &PipelineConfig, header: &TraceHeader) -> Result<Self, SessionError> {
        let config = config.patched(&header.overrides)?;
        Self::new(config, header.layout, header.intrinsics)
    }

    fn bind(mut config: PipelineConfig, layout: &StudioLayout, intrinsics: CameraIntrinsics<f64>) -> PipelineConfig {
        config.planner.rig_base = layout.rig_base;
        config.planner.intrinsics = intrinsics;
        config.director.rig_base = layout.rig_base;
        config.director.workbench = layout.workbench;
        config
    }

    fn planning_config(config: &PipelineConfig) -> PlannerConfig<f64> {
        PlannerConfig {
            bounds: config.planning_bounds(),
            ..config.planner
        }
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn layout(&self) -> &StudioLayout {
        &self.layout
    }

    pub fn header(&self) -> RecordingHeader {
        RecordingHeader {
            format: RECORDING_FORMAT.into(),
            version: RECORDING_VERSION,
            config: self.config.clone(),
            layout: self.layout,
        }
    }

    /// Index of the next tick to run.
    pub fn tick_index(&self) -> u64 {
        self.tick
    }

    /// Session time of the next tick to plan.
    pub fn time(&self) -> f64 {
        self.tick as f64 * self.config.tick_period()
    }

    /// Servo clock: session time of the latest servo step.
    pub fn servo_time(&self) -> f64 {
        self.servo.time
    }

    pub fn rig(&self) -> &CameraRig<f64> {
        &self.servo.rig
    }

    pub fn target(&self) -> &CameraPose<f64> {
        &self.target
    }

    pub fn director_state(&self) -> &DirectorState {
        self.director.state()
    }

    /// Debounced pointing state per hand, `[left, right]`.
    pub fn pointing(&self) -> [bool; 2] {
        self.cue.pointing()
    }

    pub fn timing(&self) -> TickTiming {
        self.timing
    }

    /// Feeds one input record. Cues it produces are queued for the next tick
    /// and logged to `out`.
    pub fn apply(&mut self, record: &TraceRecord, out: &mut Vec<RecordingRecord>) -> Result<(), SessionError> {
        let t = record.timestamp();
        let fail = |message: String| SessionError::Pipeline { timestamp: t, message };
        let events = match record {
            TraceRecord::Skeleton(f) => {
                let ev = self.cue.on_skeleton(f).map_err(|e| fail(e.to_string()))?;
                self.frame = Some(f.clone());
                ev
            }
            TraceRecord::Hand(h) => self.cue.on_hand(h).map_err(|e| fail(e.to_string()))?,
            TraceRecord::Utterance { text, .. } => self.cue.on_utterance(text, t).map_err(|e| fail(e.to_string()))?,
            TraceRecord::Cue(c) => self.cue.inject(c.clone()).map_err(|e| fail(e.to_string()))?,
            TraceRecord::ConfigPatch { patch, .. } => {
                self.patch(patch).map_err(|e| fail(e.to_string()))?;
                out.push(RecordingRecord::Config {
                    timestamp: t,
                    patch: patch.clone(),
                });
                Vec::new()
            }
            TraceRecord::Reset { .. } => {
                self.reset();
                out.push(RecordingRecord::Reset { timestamp: t });
                Vec::new()
            }
        };
        for e in events {
            out.push(RecordingRecord::Cue { event: e.clone() });
            self.pending.push(e);
        }
        Ok(())
    }

    /// Applies a config merge patch; the rig and director keep their state.
    /// A changed cue config restarts the cue engine.
    pub fn patch(&mut self, patch: &serde_json::Value) -> Result<(), SessionError> {
        let next = Self::bind(self.config.patched(patch)?, &self.layout, self.config.planner.intrinsics);
        next.validate()?;
        if next.cue != self.config.cue {
            self.cue = CueEngine::new(next.cue);
        }
        self.director.config = next.director;
        self.director.orbit = next.planner.orbit;
        self.director.intrinsics = next.planner.intrinsics;
        self.servo.config = next.servo;
        self.servo.bounds = next.planner.bounds;
        self.planning = Self::planning_config(&next);
        self.config = next;
        Ok(())
    }

    /// Rig to neutral, director to its default state, cue history dropped.
    pub fn reset(&mut self) {
        self.servo.reset();
        self.director.reset();
        self.cue = CueEngine::new(self.config.cue);
        self.pending.clear();
        self.orbit_path = None;
        self.frame = None;
        self.target = self.servo.neutral_pose();
    }

    /// Servo steps still owed to the current tick.
    pub fn substeps_left(&self) -> usize {
        self.substeps_left
    }

    /// One planner tick followed by the servo substeps up to the next tick.
    pub fn tick(&mut self, out: &mut Vec<RecordingRecord>) {
        self.plan_tick(out);
        while self.substeps_left > 0 {
            self.servo_step(out);
        }
    }

    /// Director step and planning for the next tick. Any servo steps the
    /// previous tick still owes run first so planner and servo stay in
    /// lockstep. Only this part is counted in [`Pipeline::timing`].
    pub fn plan_tick(&mut self, out: &mut Vec<RecordingRecord>) {
        while self.substeps_left > 0 {
            self.servo_step(out);
        }
        let started = Instant::now();
        let now = self.time();
        let cues = std::mem::take(&mut self.pending);
        let goal = self.director.step(&cues, self.frame.as_ref(), now);

        let key = self.director.state().key();
        if self.last_state != Some(key) {
            self.last_state = Some(key);
            out.push(RecordingRecord::State(StateRecord { timestamp: now, state: key }));
        }

        let rig = self.servo.rig.pose;
        let (target, plan) = self.plan(&goal);
        self.target = target;
        out.push(RecordingRecord::Tick(TickRecord {
            tick: self.tick,
            timestamp: now,
            goal,
            rig,
            target,
            plan,
        }));
        self.substeps_left = self.config.substeps();

        let spent = started.elapsed();
        self.timing.count += 1;
        self.timing.total += spent;
        self.timing.max = self.timing.max.max(spent);
    }

    /// One servo control period toward the current target. Does nothing
    /// when the current tick has no steps left.
    pub fn servo_step(&mut self, out: &mut Vec<RecordingRecord>) {
        if self.substeps_left == 0 {
            return;
        }
        let every = self.config.telemetry_every as u64;
        if let Some(event) = self.servo.step(&self.target) {
            out.push(RecordingRecord::Servo { event });
        }
        // Centered in its interval so decimated streams sample every
        // in-tick phase evenly.
        if (self.servo.steps + every / 2) % every == 0 {
            let r = &self.servo.rig;
            out.push(RecordingRecord::Telemetry(TelemetrySample {
                tick: self.tick,
                timestamp: self.servo.time,
                pose: r.pose,
                linear_speed: r.linear_vel.norm(),
                angular_speed: r.angular_vel.norm(),
                status: r.status,
            }));
        }
        self.substeps_left -= 1;
        if self.substeps_left == 0 {
            self.tick += 1;
        }
    }

    fn plan(&mut self, goal: &PlanningGoal) -> (CameraPose<f64>, Option<PlanSummary>) {
        let hold = self.target.with_zoom(goal.zoom);
        if !matches!(goal.mode, GoalMode::Orbit { .. }) {
            self.orbit_path = None;
        }
        match goal.mode {
            GoalMode::Hold => (hold, None),
            GoalMode::Orbit { center, progress } => {
                if self.orbit_path.as_ref().is_none_or(|p| p.center != center) {
                    self.orbit_path = orbit_waypoints(center, self.servo.rig.pose.position, &self.planning).ok();
                }
                match &self.orbit_path {
                    Some(path) => (path.at_progress(progress, self.planning.orbit.arc).with_zoom(goal.zoom), None),
                    None => (hold, None),
                }
            }
            GoalMode::Track => {
                let Some(subject) = goal.subject else { return (hold, None) };
                let ctx = PlanningContext {
                    current: self.servo.rig.pose.position,
                    subject: subject.position,
                    desired_distance: goal.desired_distance,
                    pitch_target: goal.pitch_target,
                    heading_target: subject.heading_target,
                    gates: goal.gates,
                };
                let outcome = plan_next_position(&ctx, &self.planning);
                let p = outcome.position;
                let pose = if goal.upper_third {
                    CameraPose::look_at_upper_third(p, subject.position, &self.planning.intrinsics, goal.zoom)
                } else {
                    CameraPose::look_at_or_keep(p, subject.position, self.target.up)
                };
                let summary = PlanSummary {
                    status: outcome.status,
                    iterations: outcome.iterations,
                    evaluations: outcome.evaluations,
                    cost: outcome.cost,
                };
                (pose.map(|q| q.with_zoom(goal.zoom)).unwrap_or(hold), Some(summary))
            }
        }
    }
}

/// Tick at which a record without an explicit tick is consumed: the first
/// tick at or after its timestamp.
pub fn default_tick(timestamp: f64, period: f64) -> u64 {
    (timestamp / period - 1e-9).ceil().max(0.0) as u64
}

/// Runs a trace through the pipeline in simulated time.
pub fn replay(trace: &SessionTrace, config: &PipelineConfig) -> Result<SessionRecording, SessionError> {
    replay_timed(trace, config).map(|(recording, _)| recording)
}

/// [`replay`] plus the wall-clock cost of every planner tick.
/// Tick at which each record applies, and the last tick to run. Live traces
/// stamp every record with its tick and set the duration, so client clocks
/// never stretch the replay. Otherwise records fall on the tick their
/// timestamp lands in and the replay runs past the last one.
pub fn tick_schedule(trace: &SessionTrace, period: f64) -> (Vec<u64>, u64) {
    let assigned: Vec<u64> = trace
        .records
        .iter()
        .map(|r| r.tick.unwrap_or_else(|| default_tick(r.record.timestamp(), period)))
        .collect();
    let end = trace.header.duration.unwrap_or_else(|| trace.end_time());
    let last_tick = assigned
        .iter()
        .copied()
        .max()
        .unwrap_or(0)
        .max((end / period + 1e-9).floor() as u64);
    (assigned, last_tick)
}

pub fn replay_timed(trace: &SessionTrace, config: &PipelineConfig) -> Result<(SessionRecording, TickTiming), SessionError> {
    let mut pipeline = Pipeline::for_trace(config, &trace.header)?;
    let period = pipeline.config().tick_period();
    let (assigned, last_tick) = tick_schedule(trace, period);

    let mut records = Vec::new();
    let mut next = 0;
    for k in 0..=last_tick {
        while next < trace.records.len() && assigned[next] <= k {
            pipeline.apply(&trace.records[next].record, &mut records)?;
            next += 1;
        }
        pipeline.tick(&mut records);
    }
    let mut recording = SessionRecording {
        header: pipeline.header(),
        records,
        metrics: None,
    };
    recording.metrics = compute_metrics(&recording, &MetricsOptions::default()).ok();
    Ok((recording, pipeline.timing()))
}
