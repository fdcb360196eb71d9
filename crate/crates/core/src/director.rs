//! Shot-level state machine: shot type, framing, angle and movement, the
//! subject the camera should film, and the planning goal handed to the
//! planner every tick.

use std::collections::VecDeque;
use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cue::{pointing_ray, CueEvent, CueKind, CuePayload, DwellTimer, Hand, Joint, SkeletonFrame, SpeechLabel};
use crate::planner::{Gates, OrbitConfig};
use crate::scene::{CameraIntrinsics, Ray, Vec3};

type V3 = Vec3<f64>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DirectorError {
    #[error("subject radius must be positive, got {0}")]
    NonPositiveRadius(f64),
    #[error("shoulder joints coincide")]
    DegenerateShoulders,
    #[error("joint {0:?} not visible")]
    JointNotVisible(Joint),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShotType {
    #[default]
    Action,
    Instructor,
    Object,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Framing {
    #[default]
    Normal,
    /// Digital 2x zoom.
    Tight,
}

impl Framing {
    pub const TIGHT_ZOOM: f64 = 2.0;

    pub fn zoom(self) -> f64 {
        match self {
            Framing::Normal => 1.0,
            Framing::Tight => Self::TIGHT_ZOOM,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Angle {
    #[default]
    Standard,
    High,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Movement {
    #[default]
    None,
    /// `progress` is the azimuth swept so far, radians.
    Orbit { center: V3, progress: f64 },
    Truck { axis: V3 },
}

impl Movement {
    pub fn kind(&self) -> MovementKind {
        match self {
            Movement::None => MovementKind::None,
            Movement::Orbit { .. } => MovementKind::Orbit,
            Movement::Truck { .. } => MovementKind::Truck,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MovementKind {
    #[default]
    None,
    Orbit,
    Truck,
}

/// Whether a (shot, framing, angle, movement) combination can occur.
///
/// | movement | Action | Instructor | Object |
/// |----------|--------|------------|--------|
/// | None     | yes    | yes        | yes    |
/// | Orbit    | yes    | yes        | yes    |
/// | Truck    | no     | no         | yes    |
///
/// Framing and angle are independent of the rest: every combination of them
/// is reachable for every allowed (shot, movement) pair. Trucking follows a
/// pointing finger, so it only exists during Object shots; leaving the Object
/// shot ends it. An orbit can be injected from any shot and keeps the shot
/// it started in.
pub fn combination_allowed(shot: ShotType, _framing: Framing, _angle: Angle, movement: MovementKind) -> bool {
    movement != MovementKind::Truck || shot == ShotType::Object
}

/// What the camera films.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Subject {
    pub position: V3,
    /// Radius of the subject sphere, meters (Action shots only).
    pub radius: f64,
    /// Desired ground-plane view direction of the camera (unit, z = 0).
    pub heading_target: Option<V3>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionDistanceRule {
    /// `3 r / tan(fov/2)`: the sphere covers a third of the frame width.
    #[default]
    Geometric,
    /// `2 r tan(fov/2) / 3`, the printed form of the same rule. It shrinks as
    /// the field of view narrows, which contradicts the one-third goal.
    Literal,
}

/// Axis-aligned box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: V3,
    pub max: V3,
}

impl Aabb {
    pub fn contains(&self, p: V3) -> bool {
        p.x >= self.min.x
            && p.x <= self.max.x
            && p.y >= self.min.y
            && p.y <= self.max.y
            && p.z >= self.min.z
            && p.z <= self.max.z
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DirectorConfig {
    /// Span of the inter-hand distance window, seconds.
    pub hand_window_secs: f64,
    /// Smallest Action subject radius, meters.
    pub min_radius: f64,
    /// Object subject sits this far along the pointing ray, meters.
    pub object_lead: f64,
    pub instructor_distance: f64,
    pub object_distance: f64,
    pub truck_distance: f64,
    pub action_distance_rule: ActionDistanceRule,
    /// How long a lost subject is held before falling back to Action.
    pub subject_hold_secs: f64,
    /// Hands resting in the workbench for this long end an Instructor shot.
    pub instructor_exit_secs: f64,
    pub workbench: Aabb,
    /// Rig base position; heading signs are chosen relative to it.
    pub rig_base: V3,
}

impl Default for DirectorConfig {
    fn default() -> Self {
        Self {
            hand_window_secs: 5.0,
            min_radius: 0.05,
            object_lead: 0.12,
            instructor_distance: 0.20,
            object_distance: 0.12,
            truck_distance: 0.12,
            action_distance_rule: ActionDistanceRule::Geometric,
            subject_hold_secs: 1.0,
            instructor_exit_secs: 2.0,
            workbench: Aabb {
                min: V3::new(-0.6, 0.3, -0.1),
                max: V3::new(0.6, 1.0, 0.35),
            },
            rig_base: V3::zero(),
        }
    }
}

impl DirectorConfig {
    pub fn validate(&self) -> Result<(), String> {
        let positive = [
            self.hand_window_secs,
            self.min_radius,
            self.object_lead,
            self.instructor_distance,
            self.object_distance,
            self.truck_distance,
            self.subject_hold_secs,
            self.instructor_exit_secs,
        ];
        if positive.iter().any(|v| !(*v > 0.0)) {
            return Err("director distances and durations must be positive".into());
        }
        Ok(())
    }
}

/// Camera-to-subject distance for a shot.
pub fn desired_distance(
    shot: ShotType,
    radius: f64,
    intrinsics: &CameraIntrinsics<f64>,
    cfg: &DirectorConfig,
) -> Result<f64, DirectorError> {
    match shot {
        ShotType::Action => {
            if !(radius > 0.0) {
                return Err(DirectorError::NonPositiveRadius(radius));
            }
            let half = (intrinsics.fov_h / 2.0).tan();
            Ok(match cfg.action_distance_rule {
                ActionDistanceRule::Geometric => 3.0 * radius / half,
                ActionDistanceRule::Literal => 2.0 * radius * half / 3.0,
            })
        }
        ShotType::Instructor => Ok(cfg.instructor_distance),
        ShotType::Object => Ok(cfg.object_distance),
    }
}

/// Ground-plane unit normal of the shoulder line, `(v_sh x v_g)` projected to
/// the ground, signed to point from the instructor toward the rig.
pub fn heading_target(frame: &SkeletonFrame, rig_base: V3) -> Result<V3, DirectorError> {
    let l = frame.joint(Joint::ShoulderL).ok_or(DirectorError::JointNotVisible(Joint::ShoulderL))?;
    let r = frame.joint(Joint::ShoulderR).ok_or(DirectorError::JointNotVisible(Joint::ShoulderR))?;
    shoulder_normal(l, r, rig_base)
}

pub fn shoulder_normal(left: V3, right: V3, rig_base: V3) -> Result<V3, DirectorError> {
    let shoulders = right - left;
    let n = shoulders
        .cross(V3::gravity())
        .horizontal()
        .normalized()
        .ok_or(DirectorError::DegenerateShoulders)?;
    let toward_rig = rig_base - left.midpoint(right);
    Ok(if n.dot(toward_rig) >= 0.0 { n } else { -n })
}

/// Ground-plane unit normal of a truck axis, signed to point away from the rig
/// (the camera films across the sweep from the rig's side).
pub fn truck_heading(axis: V3, subject: V3, rig_base: V3) -> Option<V3> {
    let n = V3::new(-axis.y, axis.x, 0.0).normalized()?;
    Some(if n.dot(subject - rig_base) >= 0.0 { n } else { -n })
}

/// How the planner should treat this tick.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GoalMode {
    /// Optimize toward the subject.
    Track,
    /// Follow the orbit waypoint for `progress`.
    Orbit { center: V3, progress: f64 },
    /// No subject known: keep the current pose.
    Hold,
}

/// Everything the planner and the camera pose builder need for one tick.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanningGoal {
    pub timestamp: f64,
    pub shot: ShotType,
    pub framing: Framing,
    pub angle: Angle,
    pub movement: Movement,
    pub subject: Option<Subject>,
    pub desired_distance: f64,
    /// Desired angle between view and gravity, radians.
    pub pitch_target: f64,
    pub gates: Gates,
    pub zoom: f64,
    /// Place the subject on the upper third line instead of the frame center.
    pub upper_third: bool,
    pub mode: GoalMode,
}

/// One entry of the state timeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateKey {
    pub shot: ShotType,
    pub framing: Framing,
    pub angle: Angle,
    pub movement: MovementKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateRecord {
    pub timestamp: f64,
    #[serde(flatten)]
    pub state: StateKey,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectorState {
    pub shot: ShotType,
    pub framing: Framing,
    pub angle: Angle,
    pub movement: Movement,
    /// (timestamp, inter-fingertip distance) over the rolling window.
    pub hand_window: VecDeque<(f64, f64)>,
    /// Debounced pointing flags `[left, right]` as seen through cues.
    pub pointing: [bool; 2],
    pub active_pointing_hand: Option<Hand>,
    /// Last ray reported with a PointStart, used when the skeleton lacks one.
    pub last_ray: Option<Ray<f64>>,
    /// Last resolved subject and when it was resolved.
    pub last_subject: Option<(f64, Subject)>,
    /// Cues received during an orbit, applied when it completes.
    pub queued: Vec<CueEvent>,
    pub instructor_exit: DwellTimer,
}

impl DirectorState {
    pub fn new(cfg: &DirectorConfig) -> Self {
        Self {
            shot: ShotType::Action,
            framing: Framing::Normal,
            angle: Angle::Standard,
            movement: Movement::None,
            hand_window: VecDeque::new(),
            pointing: [false; 2],
            active_pointing_hand: None,
            last_ray: None,
            last_subject: None,
            queued: Vec::new(),
            instructor_exit: DwellTimer::new(cfg.instructor_exit_secs),
        }
    }

    pub fn key(&self) -> StateKey {
        StateKey {
            shot: self.shot,
            framing: self.framing,
            angle: self.angle,
            movement: self.movement.kind(),
        }
    }

    /// Half the rolling mean of the inter-hand distance, at least `min_radius`.
    pub fn sphere_radius(&self, min_radius: f64) -> f64 {
        if self.hand_window.is_empty() {
            return min_radius;
        }
        let mean = self.hand_window.iter().map(|(_, d)| d).sum::<f64>() / self.hand_window.len() as f64;
        (0.5 * mean).max(min_radius)
    }

    fn set_shot(&mut self, shot: ShotType) {
        self.shot = shot;
        if shot != ShotType::Object && matches!(self.movement, Movement::Truck { .. }) {
            self.movement = Movement::None;
        }
    }
}

/// Applies one cue to the state.
fn apply_cue(state: &mut DirectorState, cue: &CueEvent, frame: Option<&SkeletonFrame>) {
    match &cue.kind {
        CueKind::PointStart => {
            let Some(hand) = cue.hand else { return };
            state.pointing[hand.index()] = true;
            state.active_pointing_hand = Some(hand);
            state.last_ray = match &cue.payload {
                Some(CuePayload::Ray(r)) => Some(*r),
                _ => frame.and_then(|f| pointing_ray(f, hand).ok()),
            };
            state.set_shot(ShotType::Object);
        }
        CueKind::PointEnd => {
            let Some(hand) = cue.hand else { return };
            state.pointing[hand.index()] = false;
            if state.active_pointing_hand == Some(hand) {
                let other = Hand::BOTH.into_iter().find(|h| state.pointing[h.index()]);
                state.active_pointing_hand = other;
                state.last_ray = other.and_then(|h| frame.and_then(|f| pointing_ray(f, h).ok()));
                if matches!(state.movement, Movement::Truck { .. }) {
                    state.movement = Movement::None;
                }
            }
            if state.active_pointing_hand.is_none() && state.shot == ShotType::Object {
                state.set_shot(ShotType::Action);
            }
        }
        CueKind::RaiseHand => {
            state.set_shot(ShotType::Instructor);
            state.instructor_exit = DwellTimer::new(state.instructor_exit.min_secs);
        }
        CueKind::TwoHandPoint => {
            let center = match &cue.payload {
                Some(CuePayload::Point(c)) => Some(*c),
                _ => frame.and_then(|f| {
                    Some(f.joint(Joint::FingertipL)?.midpoint(f.joint(Joint::FingertipR)?))
                }),
            };
            if let Some(center) = center {
                state.movement = Movement::Orbit { center, progress: 0.0 };
            }
        }
        CueKind::TruckStart => {
            if state.shot == ShotType::Object {
                if let Some(CuePayload::Truck(spec)) = &cue.payload {
                    state.movement = Movement::Truck { axis: spec.axis };
                }
            }
        }
        CueKind::TruckEnd => {
            if matches!(state.movement, Movement::Truck { .. }) {
                state.movement = Movement::None;
            }
        }
        CueKind::Speech(intent) => match intent.label {
            SpeechLabel::TightFraming => state.framing = Framing::Tight,
            SpeechLabel::HighAngle => state.angle = Angle::High,
            SpeechLabel::Normal | SpeechLabel::None => {}
        },
        CueKind::HandHidden => {
            state.framing = Framing::Normal;
            state.angle = Angle::Standard;
        }
    }
}

fn resolve(
    state: &DirectorState,
    shot: ShotType,
    frame: Option<&SkeletonFrame>,
    cfg: &DirectorConfig,
) -> Result<Subject, DirectorError> {
    let frame = frame.ok_or(DirectorError::JointNotVisible(Joint::Head))?;
    let need = |j: Joint| frame.joint(j).ok_or(DirectorError::JointNotVisible(j));
    let facing = || heading_target(frame, cfg.rig_base).ok().map(|n| -n);
    match shot {
        ShotType::Action => {
            let l = need(Joint::FingertipL)?;
            let r = need(Joint::FingertipR)?;
            Ok(Subject {
                position: l.midpoint(r),
                radius: state.sphere_radius(cfg.min_radius),
                heading_target: facing(),
            })
        }
        ShotType::Instructor => Ok(Subject {
            position: need(Joint::Eyes)?,
            radius: cfg.min_radius,
            heading_target: facing(),
        }),
        ShotType::Object => {
            let hand = state
                .active_pointing_hand
                .ok_or(DirectorError::JointNotVisible(Joint::FingertipR))?;
            let ray = match pointing_ray(frame, hand) {
                Ok(r) => r,
                Err(_) => state.last_ray.ok_or(DirectorError::JointNotVisible(hand.fingertip()))?,
            };
            let position = ray.at(cfg.object_lead);
            let heading_target = match state.movement {
                Movement::Truck { axis } => truck_heading(axis, position, cfg.rig_base),
                _ => None,
            };
            Ok(Subject {
                position,
                radius: cfg.min_radius,
                heading_target,
            })
        }
    }
}

fn hands_resting(frame: Option<&SkeletonFrame>, cfg: &DirectorConfig) -> bool {
    let Some(f) = frame else { return false };
    Hand::BOTH.into_iter().all(|h| {
        let (Some(tip), Some(wrist), Some(sh)) = (f.joint(h.fingertip()), f.joint(h.wrist()), f.joint(h.shoulder())) else {
            return false;
        };
        tip.z < sh.z && wrist.z < sh.z && cfg.workbench.contains(tip) && cfg.workbench.contains(wrist)
    })
}

/// One director tick: consumes the cues gathered since the previous tick and
/// the latest skeleton frame, and returns the new state with its goal.
pub fn step_director(
    mut state: DirectorState,
    cues: &[CueEvent],
    frame: Option<&SkeletonFrame>,
    now: f64,
    cfg: &DirectorConfig,
    orbit: &OrbitConfig<f64>,
    intrinsics: &CameraIntrinsics<f64>,
) -> (DirectorState, PlanningGoal) {
    if let Some(f) = frame {
        if let (Some(l), Some(r)) = (f.joint(Joint::FingertipL), f.joint(Joint::FingertipR)) {
            state.hand_window.push_back((f.timestamp, l.distance(r)));
        }
    }
    while state
        .hand_window
        .front()
        .is_some_and(|(t, _)| now - t > cfg.hand_window_secs)
    {
        state.hand_window.pop_front();
    }

    // Orbit bookkeeping: advance, or finish and release queued cues.
    let mut pending: Vec<CueEvent> = Vec::new();
    if let Movement::Orbit { center, progress } = state.movement {
        if progress >= orbit.arc - 1e-12 {
            state.movement = Movement::None;
            pending.append(&mut state.queued);
        } else {
            let step = orbit.arc / orbit.steps.max(1) as f64;
            state.movement = Movement::Orbit {
                center,
                progress: (progress + step).min(orbit.arc),
            };
        }
    }
    pending.extend(cues.iter().cloned());
    for cue in pending {
        if matches!(state.movement, Movement::Orbit { .. }) {
            state.queued.push(cue);
        } else {
            apply_cue(&mut state, &cue, frame);
        }
    }

    if state.shot == ShotType::Instructor && state.instructor_exit.update(hands_resting(frame, cfg), now) {
        state.set_shot(ShotType::Action);
    }

    let orbiting = matches!(state.movement, Movement::Orbit { .. });
    let subject = if orbiting {
        state.last_subject.map(|(_, s)| s)
    } else {
        match resolve(&state, state.shot, frame, cfg) {
            Ok(s) => {
                state.last_subject = Some((now, s));
                Some(s)
            }
            Err(_) => match state.last_subject {
                Some((t, s)) if now - t <= cfg.subject_hold_secs + 1e-9 => Some(s),
                _ => {
                    if state.shot != ShotType::Action {
                        state.set_shot(ShotType::Action);
                        state.active_pointing_hand = None;
                    }
                    match resolve(&state, ShotType::Action, frame, cfg) {
                        Ok(s) => {
                            state.last_subject = Some((now, s));
                            Some(s)
                        }
                        Err(_) => state.last_subject.map(|(_, s)| s),
                    }
                }
            },
        }
    };

    let trucking = matches!(state.movement, Movement::Truck { .. });
    let high = state.angle == Angle::High;
    let gates = Gates {
        distance: !high,
        pitch: high || state.shot == ShotType::Instructor,
        orientation: matches!(state.shot, ShotType::Action | ShotType::Instructor) || trucking,
    };
    let desired = if trucking {
        cfg.truck_distance
    } else {
        let radius = subject.map_or(cfg.min_radius, |s| s.radius);
        desired_distance(state.shot, radius, intrinsics, cfg).unwrap_or(cfg.object_distance)
    };
    let mode = match (state.movement, subject) {
        (Movement::Orbit { center, progress }, _) => GoalMode::Orbit { center, progress },
        (_, Some(_)) => GoalMode::Track,
        (_, None) => GoalMode::Hold,
    };
    let goal = PlanningGoal {
        timestamp: now,
        shot: state.shot,
        framing: state.framing,
        angle: state.angle,
        movement: state.movement,
        subject,
        desired_distance: desired,
        pitch_target: if high { 0.0 } else { FRAC_PI_2 },
        gates,
        zoom: state.framing.zoom(),
        upper_third: state.shot == ShotType::Instructor && !high,
        mode,
    };
    (state, goal)
}

/// Owns the director state and its configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Director {
    pub config: DirectorConfig,
    pub orbit: OrbitConfig<f64>,
    pub intrinsics: CameraIntrinsics<f64>,
    state: DirectorState,
}

impl Director {
    pub fn new(config: DirectorConfig, orbit: OrbitConfig<f64>, intrinsics: CameraIntrinsics<f64>) -> Self {
        Self {
            state: DirectorState::new(&config),
            config,
            orbit,
            intrinsics,
        }
    }

    pub fn state(&self) -> &DirectorState {
        &self.state
    }

    /// Back to the default Action / Normal / Standard state.
    pub fn reset(&mut self) {
        self.state = DirectorState::new(&self.config);
    }

    pub fn step(&mut self, cues: &[CueEvent], frame: Option<&SkeletonFrame>, now: f64) -> PlanningGoal {
        let state = std::mem::replace(&mut self.state, DirectorState::new(&self.config));
        let (state, goal) = step_director(state, cues, frame, now, &self.config, &self.orbit, &self.intrinsics);
        self.state = state;
        goal
    }
}
