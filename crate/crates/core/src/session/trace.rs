//! JSON-lines session traces: one header line, then time-sorted input records.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::synth::StudioLayout;
use super::SessionError;
use crate::cue::{CueEvent, HandKeypoints, SkeletonFrame};
use crate::scene::CameraIntrinsics;

pub const TRACE_FORMAT: &str = "framewright-trace";
pub const TRACE_VERSION: u64 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceHeader {
    pub format: String,
    pub version: u64,
    pub intrinsics: CameraIntrinsics<f64>,
    pub layout: StudioLayout,
    /// Replay runs at least this long, seconds.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration: Option<f64>,
    /// JSON merge patch applied to the pipeline config before replay.
    #[serde(default, skip_serializing_if = "serde_json::Value::is_null")]
    pub overrides: serde_json::Value,
}

impl TraceHeader {
    pub fn new(intrinsics: CameraIntrinsics<f64>, layout: StudioLayout) -> Self {
        Self {
            format: TRACE_FORMAT.into(),
            version: TRACE_VERSION,
            intrinsics,
            layout,
            duration: None,
            overrides: serde_json::Value::Null,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TraceRecord {
    Skeleton(SkeletonFrame),
    Hand(HandKeypoints),
    Utterance { timestamp: f64, text: String },
    /// Already-debounced cue that bypasses gesture classification.
    Cue(CueEvent),
    /// Merge patch on the pipeline config, applied at the next tick boundary.
    ConfigPatch { timestamp: f64, patch: serde_json::Value },
    /// Rig back to the neutral pose, director back to its default state.
    Reset { timestamp: f64 },
}

impl TraceRecord {
    pub fn timestamp(&self) -> f64 {
        match self {
            TraceRecord::Skeleton(f) => f.timestamp,
            TraceRecord::Hand(h) => h.timestamp,
            TraceRecord::Cue(c) => c.timestamp,
            TraceRecord::Utterance { timestamp, .. }
            | TraceRecord::ConfigPatch { timestamp, .. }
            | TraceRecord::Reset { timestamp } => *timestamp,
        }
    }
}

/// A record plus, for live captures, the planner tick that consumed it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceLine {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tick: Option<u64>,
    #[serde(flatten)]
    pub record: TraceRecord,
}

impl From<TraceRecord> for TraceLine {
    fn from(record: TraceRecord) -> Self {
        Self { tick: None, record }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionTrace {
    pub header: TraceHeader,
    pub records: Vec<TraceLine>,
}

impl SessionTrace {
    pub fn new(header: TraceHeader) -> Self {
        Self {
            header,
            records: Vec::new(),
        }
    }

    pub fn push(&mut self, record: TraceRecord) {
        self.records.push(record.into());
    }

    /// Timestamp of the last record, or 0 for an empty trace.
    pub fn end_time(&self) -> f64 {
        self.records.last().map_or(0.0, |r| r.record.timestamp())
    }

    /// Checks ordering and finiteness; `line` numbers count the header as 1.
    pub fn validate(&self) -> Result<(), SessionError> {
        let mut last_t = f64::NEG_INFINITY;
        let mut last_tick = 0;
        for (i, line) in self.records.iter().enumerate() {
            let corrupt = |reason: String| SessionError::CorruptRecord { line: i + 2, reason };
            let t = line.record.timestamp();
            if !t.is_finite() {
                return Err(corrupt("non-finite timestamp".into()));
            }
            if t < last_t {
                return Err(corrupt(format!("timestamp {t} precedes {last_t}")));
            }
            if let Some(tick) = line.tick {
                if tick < last_tick {
                    return Err(corrupt(format!("tick {tick} precedes {last_tick}")));
                }
                last_tick = tick;
            }
            match &line.record {
                TraceRecord::Skeleton(f) => f.validate().map_err(|e| corrupt(e.to_string()))?,
                TraceRecord::Hand(h) => h.validate().map_err(|e| corrupt(e.to_string()))?,
                _ => {}
            }
            last_t = t;
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = serde_json::to_string(&self.header).expect("header serializes");
        out.push('\n');
        for r in &self.records {
            let _ = writeln!(out, "{}", serde_json::to_string(r).expect("record serializes"));
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
        let header = parse_header(first, TRACE_FORMAT, TRACE_VERSION)?;
        let mut records = Vec::new();
        for (i, line) in lines {
            let rec: TraceLine = serde_json::from_str(line).map_err(|e| SessionError::CorruptRecord {
                line: i + 1,
                reason: e.to_string(),
            })?;
            records.push(rec);
        }
        let trace = Self { header, records };
        trace.validate()?;
        Ok(trace)
    }
}

/// Parses a header line, reporting a version mismatch before any other error.
pub(crate) fn parse_header<H: serde::de::DeserializeOwned>(
    line: &str,
    format: &str,
    version: u64,
) -> Result<H, SessionError> {
    let corrupt = |reason: String| SessionError::CorruptRecord { line: 1, reason };
    let value: serde_json::Value = serde_json::from_str(line).map_err(|e| corrupt(e.to_string()))?;
    if value.get("format").and_then(|f| f.as_str()) != Some(format) {
        return Err(corrupt(format!("expected a {format} header")));
    }
    let found = value.get("version").and_then(|v| v.as_u64()).ok_or_else(|| corrupt("missing version".into()))?;
    if found != version {
        return Err(SessionError::VersionMismatch { found, expected: version });
    }
    serde_json::from_value(value).map_err(|e| corrupt(e.to_string()))
}

pub fn load_trace(path: impl AsRef<Path>) -> Result<SessionTrace, SessionError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| SessionError::io(path, e))?;
    SessionTrace::from_jsonl(&text)
}

pub fn save_trace(trace: &SessionTrace, path: impl AsRef<Path>) -> Result<(), SessionError> {
    let path = path.as_ref();
    std::fs::write(path, trace.to_jsonl()).map_err(|e| SessionError::io(path, e))
}
