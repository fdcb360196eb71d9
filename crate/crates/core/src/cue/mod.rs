//! Cue detection: turns skeleton frames, hand keypoints and utterances into a
//! debounced stream of typed [`CueEvent`]s.

mod debounce;
mod detect;
mod gesture;
pub mod hand_model;
mod speech;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scene::{Ray, Vec3};

pub use debounce::Debouncer;
pub use detect::{
    detect_hand_hidden, detect_raise_hand, detect_truck, detect_two_hand_point, pointing_ray, DwellTimer,
    HiddenTracker, TruckDetector, TruckSpec, TruckUpdate,
};
pub use gesture::{classify_gesture, finger_extension, smoothstep, Finger};
pub use speech::{LexiconLabeler, SpeechLabeler};

type V3 = Vec3<f64>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CueError {
    #[error("hand keypoints malformed: {0}")]
    MalformedKeypoints(String),
    #[error("joint {0:?} not visible")]
    JointNotVisible(Joint),
    #[error("wrist and fingertip coincide")]
    DegenerateRay,
    #[error("history spans {span:.3} s, need {needed:.3} s")]
    InsufficientHistory { span: f64, needed: f64 },
    #[error("empty utterance")]
    EmptyUtterance,
    #[error("timestamp {got} is earlier than {last}")]
    NonMonotoneTimestamp { last: f64, got: f64 },
    #[error("skeleton frame has non-finite visible joint {0:?}")]
    NonFiniteJoint(Joint),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Hand {
    Left,
    Right,
}

impl Hand {
    pub const BOTH: [Hand; 2] = [Hand::Left, Hand::Right];

    pub fn index(self) -> usize {
        match self {
            Hand::Left => 0,
            Hand::Right => 1,
        }
    }

    pub fn wrist(self) -> Joint {
        match self {
            Hand::Left => Joint::WristL,
            Hand::Right => Joint::WristR,
        }
    }

    pub fn fingertip(self) -> Joint {
        match self {
            Hand::Left => Joint::FingertipL,
            Hand::Right => Joint::FingertipR,
        }
    }

    pub fn shoulder(self) -> Joint {
        match self {
            Hand::Left => Joint::ShoulderL,
            Hand::Right => Joint::ShoulderR,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Joint {
    Head,
    Eyes,
    ShoulderL,
    ShoulderR,
    WristL,
    WristR,
    FingertipL,
    FingertipR,
}

impl Joint {
    pub const ALL: [Joint; 8] = [
        Joint::Head,
        Joint::Eyes,
        Joint::ShoulderL,
        Joint::ShoulderR,
        Joint::WristL,
        Joint::WristR,
        Joint::FingertipL,
        Joint::FingertipR,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointState {
    pub position: V3,
    pub visible: bool,
}

/// Timestamped 3-D body joints; a missing joint counts as not visible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkeletonFrame {
    pub timestamp: f64,
    pub joints: BTreeMap<Joint, JointState>,
}

impl SkeletonFrame {
    pub fn new(timestamp: f64) -> Self {
        Self {
            timestamp,
            joints: BTreeMap::new(),
        }
    }

    pub fn with(mut self, joint: Joint, position: V3) -> Self {
        self.set(joint, position, true);
        self
    }

    pub fn set(&mut self, joint: Joint, position: V3, visible: bool) {
        self.joints.insert(joint, JointState { position, visible });
    }

    pub fn hide(&mut self, joint: Joint) {
        if let Some(j) = self.joints.get_mut(&joint) {
            j.visible = false;
        }
    }

    /// Position of a visible joint.
    pub fn joint(&self, joint: Joint) -> Option<V3> {
        self.joints.get(&joint).filter(|j| j.visible).map(|j| j.position)
    }

    pub fn require(&self, joint: Joint) -> Result<V3, CueError> {
        self.joint(joint).ok_or(CueError::JointNotVisible(joint))
    }

    pub fn validate(&self) -> Result<(), CueError> {
        for (joint, state) in &self.joints {
            if state.visible && !state.position.is_finite() {
                return Err(CueError::NonFiniteJoint(*joint));
            }
        }
        Ok(())
    }
}

/// 21 image-space hand landmarks in the usual wrist / thumb / index / middle /
/// ring / pinky order, four per finger from base to tip.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HandKeypoints {
    pub hand: Hand,
    pub points: Vec<[f64; 2]>,
    pub timestamp: f64,
}

pub const KEYPOINT_COUNT: usize = 21;

impl HandKeypoints {
    pub fn validate(&self) -> Result<(), CueError> {
        if self.points.len() != KEYPOINT_COUNT {
            return Err(CueError::MalformedKeypoints(format!(
                "expected {KEYPOINT_COUNT} points, got {}",
                self.points.len()
            )));
        }
        if self.points.iter().flatten().any(|c| !c.is_finite()) {
            return Err(CueError::MalformedKeypoints("non-finite coordinate".into()));
        }
        Ok(())
    }

    /// Translated so the wrist is at the origin and scaled so the largest
    /// pairwise distance is 1.
    pub fn normalized(&self) -> Result<Self, CueError> {
        self.validate()?;
        let [wx, wy] = self.points[0];
        let shifted: Vec<[f64; 2]> = self.points.iter().map(|[x, y]| [x - wx, y - wy]).collect();
        let mut span: f64 = 0.0;
        for (i, a) in shifted.iter().enumerate() {
            for b in &shifted[i + 1..] {
                span = span.max((a[0] - b[0]).hypot(a[1] - b[1]));
            }
        }
        if !(span > 0.0) {
            return Err(CueError::MalformedKeypoints("all points coincide".into()));
        }
        Ok(Self {
            hand: self.hand,
            points: shifted.iter().map(|[x, y]| [x / span, y / span]).collect(),
            timestamp: self.timestamp,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GestureLabel {
    Pointing,
    Other,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GestureScore {
    pub label: GestureLabel,
    pub confidence: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpeechLabel {
    TightFraming,
    HighAngle,
    Normal,
    /// The labeler abstained.
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeechIntent {
    pub label: SpeechLabel,
    pub source_text: String,
    pub timestamp: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "intent")]
pub enum CueKind {
    PointStart,
    PointEnd,
    RaiseHand,
    TwoHandPoint,
    TruckStart,
    TruckEnd,
    HandHidden,
    Speech(SpeechIntent),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CuePayload {
    Ray(Ray<f64>),
    Point(V3),
    Truck(TruckSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CueEvent {
    #[serde(flatten)]
    pub kind: CueKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hand: Option<Hand>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payload: Option<CuePayload>,
    pub timestamp: f64,
}

impl CueEvent {
    pub fn new(kind: CueKind, timestamp: f64) -> Self {
        Self {
            kind,
            hand: None,
            payload: None,
            timestamp,
        }
    }

    pub fn for_hand(mut self, hand: Hand) -> Self {
        self.hand = Some(hand);
        self
    }

    pub fn with_payload(mut self, payload: CuePayload) -> Self {
        self.payload = Some(payload);
        self
    }
}

/// Thresholds of the cue detectors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CueConfig {
    /// Minimum classifier confidence for a pointing frame.
    pub pointing_confidence: f64,
    /// Consecutive agreeing classifications needed to flip a hand's state.
    pub debounce_frames: usize,
    /// Seconds a fingertip must stay above its shoulder.
    pub raise_hand_secs: f64,
    /// m/s
    pub truck_start_speed: f64,
    /// Largest vertical spread of the fingertip while trucking, meters.
    pub truck_vertical_tolerance: f64,
    pub truck_sustain_secs: f64,
    /// m/s
    pub truck_end_speed: f64,
    pub truck_end_secs: f64,
    /// Speeds are estimated over at least this baseline, seconds.
    pub speed_baseline_secs: f64,
    /// Seconds a hand must be invisible (with the torso visible).
    pub hand_hidden_secs: f64,
}

impl Default for CueConfig {
    fn default() -> Self {
        Self {
            pointing_confidence: 0.85,
            debounce_frames: 3,
            raise_hand_secs: 1.0,
            truck_start_speed: 0.25,
            truck_vertical_tolerance: 0.05,
            truck_sustain_secs: 0.5,
            truck_end_speed: 0.1,
            truck_end_secs: 0.5,
            speed_baseline_secs: 0.1,
            hand_hidden_secs: 0.5,
        }
    }
}

impl CueConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(0.0..=1.0).contains(&self.pointing_confidence) {
            return Err("pointing_confidence must be in [0, 1]".into());
        }
        if self.debounce_frames == 0 {
            return Err("debounce_frames must be at least 1".into());
        }
        let positive = [
            self.raise_hand_secs,
            self.truck_start_speed,
            self.truck_vertical_tolerance,
            self.truck_sustain_secs,
            self.truck_end_secs,
            self.speed_baseline_secs,
            self.hand_hidden_secs,
        ];
        if positive.iter().any(|v| !(*v > 0.0)) {
            return Err("cue durations, speeds and tolerances must be positive".into());
        }
        if !(self.truck_end_speed >= 0.0 && self.truck_end_speed < self.truck_start_speed) {
            return Err("truck_end_speed must be below truck_start_speed".into());
        }
        Ok(())
    }
}

/// Stateful cue detector fed by one ordered input stream.
pub struct CueEngine {
    config: CueConfig,
    labeler: Box<dyn SpeechLabeler + Send>,
    debouncer: Debouncer,
    raise: [DwellTimer; 2],
    hidden: HiddenTracker,
    truck: TruckDetector,
    truck_hand: Option<Hand>,
    both_pointing: bool,
    last_frame: Option<SkeletonFrame>,
    last_timestamp: f64,
}

impl std::fmt::Debug for CueEngine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CueEngine")
            .field("config", &self.config)
            .field("pointing", &self.debouncer.states())
            .finish_non_exhaustive()
    }
}

impl CueEngine {
    pub fn new(config: CueConfig) -> Self {
        Self::with_labeler(config, Box::new(LexiconLabeler::default()))
    }

    pub fn with_labeler(config: CueConfig, labeler: Box<dyn SpeechLabeler + Send>) -> Self {
        Self {
            config,
            labeler,
            debouncer: Debouncer::new(config.debounce_frames),
            raise: [DwellTimer::new(config.raise_hand_secs), DwellTimer::new(config.raise_hand_secs)],
            hidden: HiddenTracker::new(config.hand_hidden_secs),
            truck: TruckDetector::new(config),
            truck_hand: None,
            both_pointing: false,
            last_frame: None,
            last_timestamp: f64::NEG_INFINITY,
        }
    }

    pub fn config(&self) -> &CueConfig {
        &self.config
    }

    /// Debounced pointing state of each hand, `[left, right]`.
    pub fn pointing(&self) -> [bool; 2] {
        self.debouncer.states()
    }

    pub fn last_frame(&self) -> Option<&SkeletonFrame> {
        self.last_frame.as_ref()
    }

    /// Midpoint of both fingertips while both hands point.
    pub fn two_hand_center(&self) -> Option<V3> {
        let [l, r] = self.pointing();
        detect_two_hand_point(self.last_frame.as_ref()?, l && r).ok().flatten()
    }

    fn check_time(&mut self, t: f64) -> Result<(), CueError> {
        if t < self.last_timestamp || !t.is_finite() {
            return Err(CueError::NonMonotoneTimestamp {
                last: self.last_timestamp,
                got: t,
            });
        }
        self.last_timestamp = t;
        Ok(())
    }

    pub fn on_hand(&mut self, kp: &HandKeypoints) -> Result<Vec<CueEvent>, CueError> {
        let score = classify_gesture(kp)?;
        self.check_time(kp.timestamp)?;
        let pointing = score.confidence >= self.config.pointing_confidence;
        let flipped = self.debouncer.update(kp.hand, pointing, kp.timestamp)?;
        Ok(match flipped {
            Some(state) => self.pointing_changed(kp.hand, state, kp.timestamp),
            None => Vec::new(),
        })
    }

    /// Events that follow a change of a hand's debounced pointing state.
    fn pointing_changed(&mut self, hand: Hand, pointing: bool, t: f64) -> Vec<CueEvent> {
        let mut out = Vec::new();
        if pointing {
            let mut e = CueEvent::new(CueKind::PointStart, t).for_hand(hand);
            if let Some(ray) = self.last_frame.as_ref().and_then(|f| pointing_ray(f, hand).ok()) {
                e = e.with_payload(CuePayload::Ray(ray));
            }
            out.push(e);
        } else {
            if self.truck_hand == Some(hand) {
                if self.truck.is_active() {
                    out.push(CueEvent::new(CueKind::TruckEnd, t).for_hand(hand));
                }
                self.truck.reset();
                self.truck_hand = None;
            }
            out.push(CueEvent::new(CueKind::PointEnd, t).for_hand(hand));
        }

        let [l, r] = self.pointing();
        let both = l && r;
        if both && !self.both_pointing {
            let mut e = CueEvent::new(CueKind::TwoHandPoint, t);
            if let Some(c) = self.two_hand_center() {
                e = e.with_payload(CuePayload::Point(c));
            }
            out.push(e);
        }
        self.both_pointing = both;

        if self.truck_hand.is_none() {
            // Trucking follows a single pointing hand.
            self.truck_hand = match (l, r) {
                (true, false) => Some(Hand::Left),
                (false, true) => Some(Hand::Right),
                _ => None,
            };
            self.truck.reset();
        } else if both {
            if self.truck.is_active() {
                out.push(CueEvent::new(CueKind::TruckEnd, t).for_hand(self.truck_hand.unwrap()));
            }
            self.truck.reset();
            self.truck_hand = None;
        }
        out
    }

    pub fn on_skeleton(&mut self, frame: &SkeletonFrame) -> Result<Vec<CueEvent>, CueError> {
        frame.validate()?;
        self.check_time(frame.timestamp)?;
        let t = frame.timestamp;
        let mut out = Vec::new();

        for hand in Hand::BOTH {
            let above = match (frame.joint(hand.fingertip()), frame.joint(hand.shoulder())) {
                (Some(tip), Some(sh)) => tip.z > sh.z,
                _ => false,
            };
            if self.raise[hand.index()].update(above, t) {
                out.push(CueEvent::new(CueKind::RaiseHand, t).for_hand(hand));
            }
        }

        for hand in self.hidden.update(frame) {
            out.push(CueEvent::new(CueKind::HandHidden, t).for_hand(hand));
        }

        if let Some(hand) = self.truck_hand {
            if let Some(tip) = frame.joint(hand.fingertip()) {
                match self.truck.update(tip, t) {
                    Some(TruckUpdate::Started(spec)) => {
                        out.push(
                            CueEvent::new(CueKind::TruckStart, t)
                                .for_hand(hand)
                                .with_payload(CuePayload::Truck(spec)),
                        );
                    }
                    Some(TruckUpdate::Ended) => out.push(CueEvent::new(CueKind::TruckEnd, t).for_hand(hand)),
                    None => {}
                }
            }
        }

        self.last_frame = Some(frame.clone());
        Ok(out)
    }

    pub fn on_utterance(&mut self, text: &str, timestamp: f64) -> Result<Vec<CueEvent>, CueError> {
        let intent = self.labeler.label(text, timestamp)?;
        self.check_time(timestamp)?;
        Ok(vec![CueEvent::new(CueKind::Speech(intent), timestamp)])
    }

    /// Feeds an already-debounced cue, bypassing gesture classification.
    /// Pointing cues update the per-hand state so the alternation invariant
    /// still holds; a cue that would break it is dropped.
    pub fn inject(&mut self, event: CueEvent) -> Result<Vec<CueEvent>, CueError> {
        self.check_time(event.timestamp)?;
        match (&event.kind, event.hand) {
            (CueKind::PointStart, Some(hand)) | (CueKind::PointEnd, Some(hand)) => {
                let want = matches!(event.kind, CueKind::PointStart);
                if self.debouncer.force(hand, want) {
                    let mut out = self.pointing_changed(hand, want, event.timestamp);
                    // Keep the caller's payload on the pointing event itself.
                    if let Some(p) = event.payload {
                        if let Some(e) = out.iter_mut().find(|e| e.kind == event.kind) {
                            e.payload = Some(p);
                        }
                    }
                    Ok(out)
                } else {
                    Ok(Vec::new())
                }
            }
            (CueKind::PointStart, None) | (CueKind::PointEnd, None) => Ok(Vec::new()),
            _ => Ok(vec![event]),
        }
    }
}
