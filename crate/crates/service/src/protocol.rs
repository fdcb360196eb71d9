//! Wire format of the session stream. See PROTOCOL.md.

use framewright_core::cue::{CueEvent, CueKind, HandKeypoints, SkeletonFrame};
use framewright_core::director::{Angle, Framing, MovementKind, ShotType};
use framewright_core::scene::CameraPose;
use framewright_core::servo::{RigStatus, ServoEvent};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const PROTOCOL_VERSION: u32 = 1;

/// Envelope shared by both directions. `kind` stays a string so unknown kinds
/// parse and can be rejected with a diagnostic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireMessage {
    pub kind: String,
    pub session_id: String,
    pub seq: u64,
    /// Inbound: capture time in seconds on the client's monotone clock.
    /// Outbound: session time.
    pub timestamp: f64,
    #[serde(default)]
    pub payload: Value,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ErrorCode {
    StaleSeq,
    MalformedPayload,
    UnknownSession,
    InvalidTransition,
    /// Data message sent to a session that is not running.
    NotRunning,
    /// The session's inbound queue is full; the message was dropped.
    Busy,
    InvalidConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlAction {
    Run,
    Pause,
    Reset,
    Stop,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionState {
    Idle,
    Running,
    Paused,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Utterance {
    pub text: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionControl {
    pub action: ControlAction,
}

/// A parsed client message.
#[derive(Debug, Clone, PartialEq)]
pub enum Inbound {
    SkeletonFrame(SkeletonFrame),
    HandKeypoints(HandKeypoints),
    Utterance(Utterance),
    InjectedCue(CueEvent),
    ConfigPatch(Value),
    SessionControl(SessionControl),
}

/// Payload object with the envelope timestamp written into it.
fn stamped<T: DeserializeOwned>(payload: &Value, timestamp: f64) -> Result<T, String> {
    let mut v = payload.clone();
    let Some(obj) = v.as_object_mut() else {
        return Err("payload must be an object".into());
    };
    obj.insert("timestamp".into(), timestamp.into());
    serde_json::from_value(v).map_err(|e| e.to_string())
}

fn plain<T: DeserializeOwned>(payload: &Value) -> Result<T, String> {
    serde_json::from_value(payload.clone()).map_err(|e| e.to_string())
}

impl Inbound {
    pub const KINDS: [&'static str; 6] = [
        "SkeletonFrame",
        "HandKeypoints",
        "Utterance",
        "InjectedCue",
        "ConfigPatch",
        "SessionControl",
    ];

    /// Validates the payload against its kind. The envelope timestamp is
    /// authoritative and overrides any `timestamp` inside the payload.
    pub fn parse(msg: &WireMessage) -> Result<Self, String> {
        if !msg.timestamp.is_finite() {
            return Err("timestamp must be finite".into());
        }
        let t = msg.timestamp;
        let p = &msg.payload;
        let parsed = match msg.kind.as_str() {
            "SkeletonFrame" => {
                let f: SkeletonFrame = stamped(p, t)?;
                f.validate().map_err(|e| e.to_string())?;
                Inbound::SkeletonFrame(f)
            }
            "HandKeypoints" => {
                let h: HandKeypoints = stamped(p, t)?;
                h.validate().map_err(|e| e.to_string())?;
                Inbound::HandKeypoints(h)
            }
            "Utterance" => {
                let u: Utterance = plain(p)?;
                if u.text.trim().is_empty() {
                    return Err("empty utterance".into());
                }
                Inbound::Utterance(u)
            }
            "InjectedCue" => {
                let c: CueEvent = stamped(p, t)?;
                if matches!(c.kind, CueKind::PointStart | CueKind::PointEnd) && c.hand.is_none() {
                    return Err("pointing cues need a hand".into());
                }
                Inbound::InjectedCue(c)
            }
            "ConfigPatch" => {
                if !p.is_object() {
                    return Err("config patch must be an object".into());
                }
                Inbound::ConfigPatch(p.clone())
            }
            "SessionControl" => Inbound::SessionControl(plain(p)?),
            other => return Err(format!("unknown kind {other:?}")),
        };
        Ok(parsed)
    }
}

/// Monitor widget state: the shot icon, the two pointing indicators and the
/// framing, angle and movement badges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectorSnapshot {
    /// Tick the state applies to.
    pub tick: u64,
    pub time: f64,
    pub shot: ShotType,
    pub shot_icon: String,
    pub left_pointing: bool,
    pub right_pointing: bool,
    pub framing: Framing,
    pub angle: Angle,
    pub movement: MovementKind,
}

impl DirectorSnapshot {
    /// Same widget state, ignoring when it was taken.
    pub fn same_widgets(&self, other: &Self) -> bool {
        self.shot == other.shot
            && self.left_pointing == other.left_pointing
            && self.right_pointing == other.right_pointing
            && self.framing == other.framing
            && self.angle == other.angle
            && self.movement == other.movement
    }
}

pub fn shot_icon(shot: ShotType) -> &'static str {
    match shot {
        ShotType::Action => "shot-action",
        ShotType::Instructor => "shot-instructor",
        ShotType::Object => "shot-object",
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RigState {
    pub tick: u64,
    pub time: f64,
    pub pose: CameraPose<f64>,
    pub target: CameraPose<f64>,
    pub linear_speed: f64,
    pub angular_speed: f64,
    pub status: RigStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CueAck {
    /// Seq of the acknowledged inbound message.
    pub ack_seq: u64,
    pub ack_kind: String,
    /// Tick at which the message was applied.
    pub tick: u64,
    /// Cues the message produced.
    pub cues: Vec<CueEvent>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Level {
    Info,
    Warn,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub level: Level,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub code: Option<ErrorCode>,
    pub message: String,
    /// Seq of the inbound message this refers to, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ack_seq: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub servo: Option<ServoEvent<f64>>,
}

impl Diagnostics {
    pub fn error(code: ErrorCode, message: impl Into<String>, ack_seq: Option<u64>) -> Self {
        Self {
            level: Level::Error,
            code: Some(code),
            message: message.into(),
            ack_seq,
            servo: None,
        }
    }
}

/// A server message before it gets a seq.
#[derive(Debug, Clone, PartialEq)]
pub enum Outbound {
    RigState(RigState),
    DirectorSnapshot(DirectorSnapshot),
    CueAck(CueAck),
    Diagnostics(Diagnostics),
}

impl Outbound {
    pub fn kind(&self) -> &'static str {
        match self {
            Outbound::RigState(_) => "RigState",
            Outbound::DirectorSnapshot(_) => "DirectorSnapshot",
            Outbound::CueAck(_) => "CueAck",
            Outbound::Diagnostics(_) => "Diagnostics",
        }
    }

    /// Telemetry may be dropped under back-pressure; nothing else may.
    pub fn droppable(&self) -> bool {
        matches!(self, Outbound::RigState(_))
    }

    pub fn into_wire(self, session_id: &str, seq: u64, timestamp: f64) -> WireMessage {
        let kind = self.kind().to_string();
        let payload = match self {
            Outbound::RigState(p) => serde_json::to_value(p),
            Outbound::DirectorSnapshot(p) => serde_json::to_value(p),
            Outbound::CueAck(p) => serde_json::to_value(p),
            Outbound::Diagnostics(p) => serde_json::to_value(p),
        }
        .expect("outbound payloads serialize");
        WireMessage {
            kind,
            session_id: session_id.to_string(),
            seq,
            timestamp,
            payload,
        }
    }

    /// Inverse of [`Outbound::into_wire`] for clients.
    pub fn from_wire(msg: &WireMessage) -> Result<Self, String> {
        let p = &msg.payload;
        Ok(match msg.kind.as_str() {
            "RigState" => Outbound::RigState(plain(p)?),
            "DirectorSnapshot" => Outbound::DirectorSnapshot(plain(p)?),
            "CueAck" => Outbound::CueAck(plain(p)?),
            "Diagnostics" => Outbound::Diagnostics(plain(p)?),
            other => return Err(format!("unknown kind {other:?}")),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn msg(kind: &str, payload: Value) -> WireMessage {
        WireMessage {
            kind: kind.into(),
            session_id: "s".into(),
            seq: 1,
            timestamp: 2.5,
            payload,
        }
    }

    #[test]
    fn envelope_timestamp_wins() {
        let m = msg("InjectedCue", json!({"kind": "raise_hand", "timestamp": 99.0}));
        let Inbound::InjectedCue(c) = Inbound::parse(&m).unwrap() else { panic!() };
        assert_eq!(c.timestamp, 2.5);
        assert_eq!(c.kind, CueKind::RaiseHand);
    }

    #[test]
    fn unknown_kind_and_bad_payloads_are_errors() {
        assert!(Inbound::parse(&msg("Teleport", json!({}))).is_err());
        assert!(Inbound::parse(&msg("Utterance", json!({"text": "  "}))).is_err());
        assert!(Inbound::parse(&msg("Utterance", json!([1, 2]))).is_err());
        assert!(Inbound::parse(&msg("HandKeypoints", json!({"hand": "left", "points": [[0.0, 0.0]]}))).is_err());
        assert!(Inbound::parse(&msg("InjectedCue", json!({"kind": "point_start"}))).is_err());
        assert!(Inbound::parse(&msg("ConfigPatch", json!(3))).is_err());
        assert!(Inbound::parse(&msg("SessionControl", json!({"action": "fly"}))).is_err());
        let mut m = msg("Utterance", json!({"text": "hi"}));
        m.timestamp = f64::NAN;
        assert!(Inbound::parse(&m).is_err());
    }

    #[test]
    fn skeleton_payload_parses() {
        let m = msg(
            "SkeletonFrame",
            json!({"joints": {"head": {"position": {"x": 0.0, "y": 0.8, "z": 0.6}, "visible": true}}}),
        );
        let Inbound::SkeletonFrame(f) = Inbound::parse(&m).unwrap() else { panic!() };
        assert_eq!(f.timestamp, 2.5);
        assert_eq!(f.joints.len(), 1);
    }

    #[test]
    fn outbound_round_trips_through_the_envelope() {
        let d = Outbound::Diagnostics(Diagnostics::error(ErrorCode::StaleSeq, "late", Some(4)));
        let w = d.clone().into_wire("abc", 7, 1.25);
        assert_eq!(w.kind, "Diagnostics");
        assert_eq!(w.payload["code"], "StaleSeq");
        let text = serde_json::to_string(&w).unwrap();
        let back: WireMessage = serde_json::from_str(&text).unwrap();
        assert_eq!(Outbound::from_wire(&back).unwrap(), d);
    }
}
