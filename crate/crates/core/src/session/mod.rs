//! Trace files, the deterministic replay harness, metrics and synthetic
//! scenario generation.

use thiserror::Error;

pub mod config;
pub mod metrics;
pub mod pipeline;
pub mod synth;
pub mod trace;

pub use config::{merge_patch, PipelineConfig};
pub use metrics::{compute_metrics, Metrics, MetricsOptions, Stats, TimelineSummary};
pub use pipeline::{
    default_tick, load_recording, replay, replay_timed, tick_schedule, save_recording, Pipeline, PlanSummary, RecordingHeader, RecordingRecord,
    SessionRecording, TelemetrySample, TickRecord, TickTiming, RECORDING_FORMAT, RECORDING_VERSION,
};
pub use synth::{generate, Scenario, Script, ScriptAction, ScriptEvent, StudioLayout};
pub use trace::{load_trace, save_trace, SessionTrace, TraceHeader, TraceLine, TraceRecord, TRACE_FORMAT, TRACE_VERSION};

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("format version {found} does not match reader version {expected}")]
    VersionMismatch { found: u64, expected: u64 },
    #[error("line {line}: {reason}")]
    CorruptRecord { line: usize, reason: String },
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("t={timestamp:.3}s: {message}")]
    Pipeline { timestamp: f64, message: String },
    #[error("recording contains no ticks")]
    EmptyRecording,
    #[error("unknown scenario '{0}'")]
    UnknownScenario(String),
}

impl SessionError {
    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.display().to_string(),
            source,
        }
    }
}
