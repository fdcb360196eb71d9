//! Session metrics, computed from a recording alone.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::pipeline::{SessionRecording, TickRecord};
use super::SessionError;
use crate::director::{Angle, Framing, GoalMode, MovementKind, ShotType, StateRecord};
use crate::scene::{project, sphere_width_fraction, Vec3};
use crate::servo::RigStatus;

/// Mean, 95th percentile (nearest rank) and maximum of a sample.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Stats {
    pub count: usize,
    pub mean: f64,
    pub p95: f64,
    pub max: f64,
}

impl Stats {
    pub fn of(values: &[f64]) -> Self {
        if values.is_empty() {
            return Self::default();
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let n = v.len();
        let rank = ((0.95 * n as f64).ceil() as usize).clamp(1, n);
        Self {
            count: n,
            mean: v.iter().sum::<f64>() / n as f64,
            p95: v[rank - 1],
            max: v[n - 1],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Segments {
    /// How many times the value was entered.
    pub count: usize,
    /// Total time spent in the value, seconds.
    pub duration: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TimelineSummary {
    pub shot: BTreeMap<ShotType, Segments>,
    pub framing: BTreeMap<Framing, Segments>,
    pub angle: BTreeMap<Angle, Segments>,
    pub movement: BTreeMap<MovementKind, Segments>,
    pub shot_changes: usize,
    pub framing_changes: usize,
    pub angle_changes: usize,
    pub movement_changes: usize,
}

impl TimelineSummary {
    pub fn from_timeline(timeline: &[StateRecord], end: f64) -> Self {
        fn add<K: Ord + Copy>(map: &mut BTreeMap<K, Segments>, k: K, entered: bool, dt: f64) {
            let s = map.entry(k).or_default();
            s.count += entered as usize;
            s.duration += dt;
        }
        let mut out = Self::default();
        for (i, rec) in timeline.iter().enumerate() {
            let until = timeline.get(i + 1).map_or(end, |n| n.timestamp).max(rec.timestamp);
            let dt = until - rec.timestamp;
            let prev = i.checked_sub(1).map(|j| timeline[j].state);
            let s = rec.state;
            let changed = |f: &dyn Fn(&crate::director::StateKey) -> bool| prev.is_none_or(|p| f(&p));
            let shot = changed(&|p| p.shot != s.shot);
            let framing = changed(&|p| p.framing != s.framing);
            let angle = changed(&|p| p.angle != s.angle);
            let movement = changed(&|p| p.movement != s.movement);
            add(&mut out.shot, s.shot, shot, dt);
            add(&mut out.framing, s.framing, framing, dt);
            add(&mut out.angle, s.angle, angle, dt);
            add(&mut out.movement, s.movement, movement, dt);
            if prev.is_some() {
                out.shot_changes += shot as usize;
                out.framing_changes += framing as usize;
                out.angle_changes += angle as usize;
                out.movement_changes += movement as usize;
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MetricsOptions {
    /// Samples this soon after a state change are transients and skipped.
    pub settle_secs: f64,
    /// Samples before this time are skipped.
    pub from: f64,
}

impl Default for MetricsOptions {
    fn default() -> Self {
        Self {
            settle_secs: 2.0,
            from: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Metrics {
    pub duration: f64,
    pub ticks: usize,
    /// Subject-sphere width as a fraction of the frame (Action, normal framing).
    pub width_fraction: Stats,
    /// |width - 1/3| / (1/3).
    pub width_error: Stats,
    /// |eye row - 1/3| in frame heights (Instructor, standard angle).
    pub eye_line_error: Stats,
    /// |camera-subject distance - desired|, meters, where the distance term is on.
    pub distance_error: Stats,
    /// Angle between the ground-plane view and the heading target, degrees.
    pub heading_error_deg: Stats,
    /// dot(view, gravity) during high-angle shots.
    pub high_angle_dot: Stats,
    /// Rig displacement per planner tick, meters.
    pub tick_displacement: Stats,
    pub timeline: TimelineSummary,
}

/// Frame-composition, distance and heading statistics over settled telemetry
/// samples, plus the shot timeline summary.
pub fn compute_metrics(recording: &SessionRecording, opts: &MetricsOptions) -> Result<Metrics, SessionError> {
    let ticks: HashMap<u64, &TickRecord> = recording.ticks().map(|t| (t.tick, t)).collect();
    if ticks.is_empty() {
        return Err(SessionError::EmptyRecording);
    }
    let intr = recording.header.config.planner.intrinsics;
    let timeline = recording.timeline();
    let period = recording.header.config.tick_period();
    let end = recording
        .ticks()
        .map(|t| t.timestamp + period)
        .fold(0.0, f64::max);

    let mut width = Vec::new();
    let mut width_err = Vec::new();
    let mut eye = Vec::new();
    let mut dist = Vec::new();
    let mut heading = Vec::new();
    let mut high = Vec::new();

    let mut change_idx = 0;
    for s in recording.telemetry() {
        while change_idx + 1 < timeline.len() && timeline[change_idx + 1].timestamp <= s.timestamp {
            change_idx += 1;
        }
        let since_change = timeline.get(change_idx).map_or(f64::INFINITY, |r| s.timestamp - r.timestamp);
        if s.timestamp < opts.from || since_change < opts.settle_secs || s.status != RigStatus::Tracking {
            continue;
        }
        let Some(tick) = ticks.get(&s.tick) else { continue };
        let goal = &tick.goal;
        let (GoalMode::Track, Some(subject)) = (goal.mode, goal.subject) else {
            continue;
        };
        let pose = &s.pose;
        if goal.shot == ShotType::Action && goal.framing == Framing::Normal && goal.movement.kind() == MovementKind::None {
            if let Ok(w) = sphere_width_fraction(pose, &intr, subject.position, subject.radius) {
                width.push(w);
                width_err.push((w - 1.0 / 3.0).abs() * 3.0);
            }
        }
        if goal.shot == ShotType::Instructor && goal.angle == Angle::Standard {
            if let Ok(p) = project(pose, &intr, subject.position) {
                eye.push((p.v - 1.0 / 3.0).abs());
            }
        }
        if goal.gates.distance {
            dist.push((pose.position.distance(subject.position) - goal.desired_distance).abs());
        }
        if let (true, Some(h)) = (goal.gates.orientation, subject.heading_target) {
            if let Some(view) = pose.forward.horizontal().normalized() {
                heading.push(view.dot(h).clamp(-1.0, 1.0).acos().to_degrees());
            }
        }
        if goal.angle == Angle::High {
            high.push(pose.forward.dot(Vec3::gravity()));
        }
    }

    let mut ordered: Vec<&TickRecord> = ticks.values().copied().collect();
    ordered.sort_by_key(|t| t.tick);
    let steps: Vec<f64> = ordered
        .windows(2)
        .filter(|w| w[1].timestamp >= opts.from)
        .map(|w| w[1].rig.position.distance(w[0].rig.position))
        .collect();

    Ok(Metrics {
        duration: end,
        ticks: ordered.len(),
        width_fraction: Stats::of(&width),
        width_error: Stats::of(&width_err),
        eye_line_error: Stats::of(&eye),
        distance_error: Stats::of(&dist),
        heading_error_deg: Stats::of(&heading),
        high_angle_dot: Stats::of(&high),
        tick_displacement: Stats::of(&steps),
        timeline: TimelineSummary::from_timeline(&timeline, end),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::director::{Movement, PlanningGoal, StateKey, Subject};
    use crate::planner::Gates;
    use crate::scene::{CameraIntrinsics, CameraPose};
    use crate::session::pipeline::{RecordingRecord, TelemetrySample};
    use crate::session::{PipelineConfig, RecordingHeader, StudioLayout, RECORDING_FORMAT, RECORDING_VERSION};

    #[test]
    fn stats_nearest_rank() {
        let v: Vec<f64> = (1..=100u32).map(f64::from).collect();
        let s = Stats::of(&v);
        assert_eq!((s.count, s.mean, s.p95, s.max), (100, 50.5, 95.0, 100.0));
        assert_eq!(Stats::of(&[]).count, 0);
        assert_eq!(Stats::of(&[2.0]).p95, 2.0);
    }

    #[test]
    fn empty_recording_is_an_error() {
        let rec = SessionRecording {
            header: RecordingHeader {
                format: RECORDING_FORMAT.into(),
                version: RECORDING_VERSION,
                config: PipelineConfig::default(),
                layout: StudioLayout::default(),
            },
            records: vec![],
            metrics: None,
        };
        assert!(matches!(compute_metrics(&rec, &MetricsOptions::default()), Err(SessionError::EmptyRecording)));
    }

    /// Camera pinned at the analytic optimum of an Action shot.
    #[test]
    fn pinned_optimum_has_zero_error() {
        let intr: CameraIntrinsics<f64> = CameraIntrinsics::default();
        let cfg = PipelineConfig::default();
        let center = Vec3::new(0.0, 0.6, 0.15);
        let r = 0.08;
        // Distance at which the true silhouette covers exactly a third.
        let half = (intr.fov_h / 2.0).tan();
        let d = r / (half / 3.0).atan().sin();
        let pose = CameraPose::look_at(center - Vec3::new(0.0, d, 0.0), center).unwrap();
        let subject = Subject {
            position: center,
            radius: r,
            heading_target: Some(Vec3::unit_y()),
        };
        let goal = PlanningGoal {
            timestamp: 0.0,
            shot: ShotType::Action,
            framing: Framing::Normal,
            angle: Angle::Standard,
            movement: Movement::None,
            subject: Some(subject),
            desired_distance: d,
            pitch_target: std::f64::consts::FRAC_PI_2,
            gates: Gates { distance: true, pitch: false, orientation: true },
            zoom: 1.0,
            upper_third: false,
            mode: GoalMode::Track,
        };
        let state = StateKey {
            shot: ShotType::Action,
            framing: Framing::Normal,
            angle: Angle::Standard,
            movement: MovementKind::None,
        };
        let mut records = vec![RecordingRecord::State(StateRecord { timestamp: 0.0, state })];
        for k in 0..50u64 {
            let t = k as f64 * 0.2;
            records.push(RecordingRecord::Tick(TickRecord {
                tick: k,
                timestamp: t,
                goal: PlanningGoal { timestamp: t, ..goal },
                rig: pose,
                target: pose,
                plan: None,
            }));
            records.push(RecordingRecord::Telemetry(TelemetrySample {
                tick: k,
                timestamp: t + 0.2,
                pose,
                linear_speed: 0.0,
                angular_speed: 0.0,
                status: RigStatus::Tracking,
            }));
        }
        let rec = SessionRecording {
            header: RecordingHeader {
                format: RECORDING_FORMAT.into(),
                version: RECORDING_VERSION,
                config: cfg,
                layout: StudioLayout::default(),
            },
            records,
            metrics: None,
        };
        let m = compute_metrics(&rec, &MetricsOptions::default()).unwrap();
        assert!(m.width_error.count > 30);
        assert!(m.width_error.mean < 1e-6, "{:?}", m.width_error);
        assert!(m.distance_error.mean < 1e-6);
        assert!(m.heading_error_deg.mean < 1e-6);
        assert_eq!(m.tick_displacement.max, 0.0);
        assert_eq!(m.timeline.shot[&ShotType::Action].count, 1);
        assert!((m.timeline.shot[&ShotType::Action].duration - 10.0).abs() < 1e-9);
    }

    #[test]
    fn timeline_counts_entries_and_changes() {
        let key = |shot, framing| StateKey {
            shot,
            framing,
            angle: Angle::Standard,
            movement: MovementKind::None,
        };
        let tl = [
            StateRecord { timestamp: 0.0, state: key(ShotType::Action, Framing::Normal) },
            StateRecord { timestamp: 1.0, state: key(ShotType::Object, Framing::Normal) },
            StateRecord { timestamp: 2.0, state: key(ShotType::Object, Framing::Tight) },
            StateRecord { timestamp: 4.0, state: key(ShotType::Action, Framing::Tight) },
        ];
        let s = TimelineSummary::from_timeline(&tl, 5.0);
        assert_eq!(s.shot[&ShotType::Action].count, 2);
        assert_eq!(s.shot[&ShotType::Action].duration, 2.0);
        assert_eq!(s.shot[&ShotType::Object].duration, 3.0);
        assert_eq!(s.shot_changes, 2);
        assert_eq!(s.framing_changes, 1);
        assert_eq!(s.framing[&Framing::Tight].count, 1);
    }
}
