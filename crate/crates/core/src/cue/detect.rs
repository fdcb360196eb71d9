//! Skeleton-based cue detectors: pointing ray, raised hand, truck sweep,
//! two-hand point and hidden hand.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::{CueConfig, CueError, Hand, Joint, SkeletonFrame, V3};
use crate::scene::Ray;

/// Slack on duration comparisons so sampled clocks hitting a threshold
/// exactly still count.
const TIME_SLACK: f64 = 1e-9;

/// Ray from the fingertip along the wrist-to-fingertip direction.
pub fn pointing_ray(frame: &SkeletonFrame, hand: Hand) -> Result<Ray<f64>, CueError> {
    let wrist = frame.require(hand.wrist())?;
    let tip = frame.require(hand.fingertip())?;
    Ray::new(tip, tip - wrist).map_err(|_| CueError::DegenerateRay)
}

/// Fires once when a condition has held continuously for `min_secs`; re-arms
/// when the condition drops.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DwellTimer {
    pub min_secs: f64,
    since: Option<f64>,
    fired: bool,
}

impl DwellTimer {
    pub fn new(min_secs: f64) -> Self {
        Self {
            min_secs,
            since: None,
            fired: false,
        }
    }

    pub fn update(&mut self, active: bool, t: f64) -> bool {
        if !active {
            self.since = None;
            self.fired = false;
            return false;
        }
        let since = *self.since.get_or_insert(t);
        if !self.fired && t - since >= self.min_secs - TIME_SLACK {
            self.fired = true;
            return true;
        }
        false
    }

    pub fn active_since(&self) -> Option<f64> {
        self.since
    }
}

fn span(history: &[SkeletonFrame]) -> f64 {
    match (history.first(), history.last()) {
        (Some(a), Some(b)) => b.timestamp - a.timestamp,
        _ => 0.0,
    }
}

/// True when either fingertip stays above its own shoulder for at least
/// `min_secs` somewhere in the window.
pub fn detect_raise_hand(history: &[SkeletonFrame], min_secs: f64) -> Result<bool, CueError> {
    let s = span(history);
    if s < min_secs - TIME_SLACK {
        return Err(CueError::InsufficientHistory { span: s, needed: min_secs });
    }
    let mut timers = [DwellTimer::new(min_secs); 2];
    let mut fired = false;
    for f in history {
        for hand in Hand::BOTH {
            let above = match (f.joint(hand.fingertip()), f.joint(hand.shoulder())) {
                (Some(tip), Some(sh)) => tip.z > sh.z,
                _ => false,
            };
            fired |= timers[hand.index()].update(above, f.timestamp);
        }
    }
    Ok(fired)
}

/// Midpoint of the two fingertips when both hands point.
pub fn detect_two_hand_point(frame: &SkeletonFrame, both_pointing: bool) -> Result<Option<V3>, CueError> {
    if !both_pointing {
        return Ok(None);
    }
    let l = frame.require(Joint::FingertipL)?;
    let r = frame.require(Joint::FingertipR)?;
    Ok(Some(l.midpoint(r)))
}

fn hand_hidden(frame: &SkeletonFrame, hand: Hand) -> bool {
    let torso = frame.joint(Joint::ShoulderL).is_some() && frame.joint(Joint::ShoulderR).is_some();
    torso && frame.joint(hand.wrist()).is_none() && frame.joint(hand.fingertip()).is_none()
}

/// Tracks how long each hand has been invisible while the torso is visible.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HiddenTracker {
    timers: [DwellTimer; 2],
}

impl HiddenTracker {
    pub fn new(min_secs: f64) -> Self {
        Self {
            timers: [DwellTimer::new(min_secs); 2],
        }
    }

    /// Hands that just crossed the hidden threshold.
    pub fn update(&mut self, frame: &SkeletonFrame) -> Vec<Hand> {
        Hand::BOTH
            .into_iter()
            .filter(|h| self.timers[h.index()].update(hand_hidden(frame, *h), frame.timestamp))
            .collect()
    }
}

/// True when a hand stays hidden for at least `min_secs` within the window.
pub fn detect_hand_hidden(history: &[SkeletonFrame], min_secs: f64) -> bool {
    let mut t = HiddenTracker::new(min_secs);
    history.iter().any(|f| !t.update(f).is_empty())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruckSpec {
    /// Unit ground-plane direction of the sweep, signed by the motion.
    pub axis: V3,
    /// Length of the sweep along the axis so far, meters.
    pub extent: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TruckUpdate {
    Started(TruckSpec),
    Ended,
}

/// Watches the pointing fingertip for a fast, flat horizontal sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct TruckDetector {
    cfg: CueConfig,
    samples: VecDeque<(f64, V3)>,
    active: Option<TruckSpec>,
}

impl TruckDetector {
    pub fn new(cfg: CueConfig) -> Self {
        Self {
            cfg,
            samples: VecDeque::new(),
            active: None,
        }
    }

    pub fn is_active(&self) -> bool {
        self.active.is_some()
    }

    pub fn active(&self) -> Option<TruckSpec> {
        self.active
    }

    pub fn reset(&mut self) {
        self.samples.clear();
        self.active = None;
    }

    /// Horizontal speed at sample `i`, measured against the latest sample at
    /// least one baseline earlier.
    fn speed_at(&self, i: usize) -> Option<f64> {
        let (ti, pi) = self.samples[i];
        let j = (0..i).rev().find(|&j| ti - self.samples[j].0 >= self.cfg.speed_baseline_secs - TIME_SLACK)?;
        let (tj, pj) = self.samples[j];
        Some((pi - pj).horizontal().norm() / (ti - tj))
    }

    /// Indices of samples within the trailing `secs`, provided the history
    /// reaches back far enough to give each of them a speed.
    fn window(&self, secs: f64) -> Option<std::ops::Range<usize>> {
        let now = self.samples.back()?.0;
        let oldest = self.samples.front()?.0;
        if now - oldest < secs + self.cfg.speed_baseline_secs - TIME_SLACK {
            return None;
        }
        let start = self.samples.iter().position(|(t, _)| *t >= now - secs - TIME_SLACK)?;
        Some(start..self.samples.len())
    }

    pub fn update(&mut self, tip: V3, t: f64) -> Option<TruckUpdate> {
        self.samples.push_back((t, tip));
        let keep = self.cfg.truck_sustain_secs.max(self.cfg.truck_end_secs) + 2.0 * self.cfg.speed_baseline_secs;
        while self.samples.front().is_some_and(|(t0, _)| t - t0 > keep) {
            self.samples.pop_front();
        }

        if self.active.is_some() {
            let w = self.window(self.cfg.truck_end_secs)?;
            let slow = w.clone().all(|i| self.speed_at(i).is_some_and(|s| s < self.cfg.truck_end_speed));
            if slow {
                self.active = None;
                return Some(TruckUpdate::Ended);
            }
            return None;
        }

        let w = self.window(self.cfg.truck_sustain_secs)?;
        let fast = w.clone().all(|i| self.speed_at(i).is_some_and(|s| s >= self.cfg.truck_start_speed));
        if !fast {
            return None;
        }
        let pts: Vec<V3> = w.map(|i| self.samples[i].1).collect();
        let (zmin, zmax) = pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.z), b.max(p.z)));
        if zmax - zmin >= self.cfg.truck_vertical_tolerance {
            return None;
        }
        let spec = principal_axis(&pts)?;
        self.active = Some(spec);
        Some(TruckUpdate::Started(spec))
    }
}

/// Principal ground-plane direction of a point trace, signed along the net
/// motion from first to last point.
fn principal_axis(pts: &[V3]) -> Option<TruckSpec> {
    let n = pts.len() as f64;
    let (mx, my) = pts.iter().fold((0.0, 0.0), |(x, y), p| (x + p.x / n, y + p.y / n));
    let (mut cxx, mut cyy, mut cxy) = (0.0, 0.0, 0.0);
    for p in pts {
        let (dx, dy) = (p.x - mx, p.y - my);
        cxx += dx * dx;
        cyy += dy * dy;
        cxy += dx * dy;
    }
    let angle = 0.5 * (2.0 * cxy).atan2(cxx - cyy);
    let mut axis = V3::new(angle.cos(), angle.sin(), 0.0);
    let net = *pts.last()? - pts[0];
    if axis.dot(net) < 0.0 {
        axis = -axis;
    }
    let proj: Vec<f64> = pts.iter().map(|p| p.dot(axis)).collect();
    let extent = proj.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - proj.iter().cloned().fold(f64::INFINITY, f64::min);
    Some(TruckSpec { axis, extent })
}

/// First truck start in a fingertip trace recorded while pointing.
pub fn detect_truck(trace: &[(f64, V3)], pointing_active: bool, cfg: &CueConfig) -> Option<TruckSpec> {
    if !pointing_active {
        return None;
    }
    let mut d = TruckDetector::new(*cfg);
    trace.iter().find_map(|(t, p)| match d.update(*p, *t) {
        Some(TruckUpdate::Started(s)) => Some(s),
        _ => None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn v(x: f64, y: f64, z: f64) -> V3 {
        V3::new(x, y, z)
    }

    fn body(t: f64) -> SkeletonFrame {
        SkeletonFrame::new(t)
            .with(Joint::Head, v(0.0, 0.8, 0.6))
            .with(Joint::Eyes, v(0.0, 0.78, 0.52))
            .with(Joint::ShoulderL, v(0.18, 0.8, 0.4))
            .with(Joint::ShoulderR, v(-0.18, 0.8, 0.4))
            .with(Joint::WristL, v(0.1, 0.65, 0.15))
            .with(Joint::WristR, v(-0.1, 0.65, 0.15))
            .with(Joint::FingertipL, v(0.1, 0.55, 0.15))
            .with(Joint::FingertipR, v(-0.1, 0.55, 0.15))
    }

    #[test]
    fn ray_points_from_wrist_through_fingertip() {
        let f = SkeletonFrame::new(0.0)
            .with(Joint::WristR, v(0.0, 0.0, 1.0))
            .with(Joint::FingertipR, v(0.0, 0.1, 1.0));
        let r = pointing_ray(&f, Hand::Right).unwrap();
        assert!((r.direction - v(0.0, 1.0, 0.0)).norm() < 1e-12);
        assert_eq!(r.origin, v(0.0, 0.1, 1.0));
        let f = SkeletonFrame::new(0.0)
            .with(Joint::WristR, v(0.0, 0.0, 1.0))
            .with(Joint::FingertipR, v(0.0, 0.0, 1.0));
        assert_eq!(pointing_ray(&f, Hand::Right), Err(CueError::DegenerateRay));
        assert_eq!(pointing_ray(&f, Hand::Left), Err(CueError::JointNotVisible(Joint::WristL)));
    }

    proptest! {
        #[test]
        fn ray_is_unit_and_starts_at_fingertip(
            w in proptest::array::uniform3(-2.0f64..2.0), d in proptest::array::uniform3(-1.0f64..1.0)
        ) {
            let wrist = v(w[0], w[1], w[2]);
            let tip = wrist + v(d[0], d[1], d[2]);
            prop_assume!(v(d[0], d[1], d[2]).norm() > 1e-6);
            let f = SkeletonFrame::new(0.0).with(Joint::WristL, wrist).with(Joint::FingertipL, tip);
            let r = pointing_ray(&f, Hand::Left).unwrap();
            prop_assert!((r.direction.norm() - 1.0).abs() < 1e-9);
            prop_assert_eq!(r.origin, tip);
        }
    }

    /// 30 Hz frames with the right fingertip above the shoulder on [on, off).
    fn raise_window(on: f64, off: f64, total: f64) -> Vec<SkeletonFrame> {
        let n = (total * 30.0).round() as usize;
        (0..=n)
            .map(|k| {
                let t = k as f64 / 30.0;
                let mut f = body(t);
                if t >= on - 1e-12 && t < off - 1e-12 {
                    f.set(Joint::FingertipR, v(-0.2, 0.75, 0.55), true);
                }
                f
            })
            .collect()
    }

    #[test]
    fn raise_hand_requires_a_full_second() {
        assert!(detect_raise_hand(&raise_window(0.5, 1.7 + 1e-9, 3.0), 1.0).unwrap());
        assert!(!detect_raise_hand(&raise_window(0.5, 1.0, 3.0), 1.0).unwrap());
        assert!(!detect_raise_hand(&raise_window(5.0, 5.0, 3.0), 1.0).unwrap());
        // Exactly 1.0 s between the first and last raised frame fires.
        assert!(detect_raise_hand(&raise_window(0.5, 1.5 + 1.0 / 30.0, 3.0), 1.0).unwrap());
        // One frame short does not.
        assert!(!detect_raise_hand(&raise_window(0.5, 1.5, 3.0), 1.0).unwrap());
    }

    #[test]
    fn raise_hand_needs_enough_history() {
        assert!(matches!(
            detect_raise_hand(&raise_window(0.0, 1.0, 0.5), 1.0),
            Err(CueError::InsufficientHistory { .. })
        ));
    }

    #[test]
    fn two_hand_center_is_the_fingertip_midpoint() {
        let f = SkeletonFrame::new(0.0)
            .with(Joint::FingertipL, v(0.0, 1.0, 1.0))
            .with(Joint::FingertipR, v(0.2, 1.0, 1.0));
        assert_eq!(detect_two_hand_point(&f, true).unwrap(), Some(v(0.1, 1.0, 1.0)));
        assert_eq!(detect_two_hand_point(&f, false).unwrap(), None);
    }

    fn hidden_window(hide_from: f64, hide_to: f64) -> Vec<SkeletonFrame> {
        (0..=60)
            .map(|k| {
                let t = k as f64 / 30.0;
                let mut f = body(t);
                if t >= hide_from - 1e-12 && t < hide_to - 1e-12 {
                    f.hide(Joint::WristR);
                    f.hide(Joint::FingertipR);
                }
                f
            })
            .collect()
    }

    #[test]
    fn hidden_hand_needs_half_a_second() {
        assert!(detect_hand_hidden(&hidden_window(0.5, 1.1 + 1e-9), 0.5));
        assert!(!detect_hand_hidden(&hidden_window(0.5, 0.6), 0.5));
        assert!(!detect_hand_hidden(&hidden_window(9.0, 9.0), 0.5));
    }

    #[test]
    fn hidden_hand_requires_visible_torso() {
        let mut frames = hidden_window(0.0, 2.0);
        for f in &mut frames {
            f.hide(Joint::ShoulderL);
        }
        assert!(!detect_hand_hidden(&frames, 0.5));
    }

    fn sweep(dir: V3, speed: f64, secs: f64) -> Vec<(f64, V3)> {
        let start = v(0.0, 0.55, 0.15);
        let n = (secs * 30.0).round() as usize;
        (0..=n)
            .map(|k| {
                let t = k as f64 / 30.0;
                (t, start + dir * (speed * t))
            })
            .collect()
    }

    #[test]
    fn horizontal_sweep_starts_a_truck_along_the_sweep() {
        let cfg = CueConfig::default();
        let dir = v(0.8, 0.6, 0.0);
        let spec = detect_truck(&sweep(dir, 0.4, 1.0), true, &cfg).unwrap();
        assert!((spec.axis - dir).norm() < 1e-9, "{:?}", spec.axis);
        assert!(spec.extent > 0.18);
        let spec = detect_truck(&sweep(-dir, 0.4, 1.0), true, &cfg).unwrap();
        assert!((spec.axis + dir).norm() < 1e-9);
    }

    #[test]
    fn stationary_or_vertical_motion_is_not_a_truck() {
        let cfg = CueConfig::default();
        assert!(detect_truck(&sweep(v(0.0, 0.0, 0.0), 0.0, 2.0), true, &cfg).is_none());
        assert!(detect_truck(&sweep(v(0.6, 0.0, 0.8), 0.5, 1.0), true, &cfg).is_none());
        assert!(detect_truck(&sweep(v(1.0, 0.0, 0.0), 0.4, 1.0), false, &cfg).is_none());
        // Too slow.
        assert!(detect_truck(&sweep(v(1.0, 0.0, 0.0), 0.2, 2.0), true, &cfg).is_none());
    }

    #[test]
    fn truck_ends_after_the_finger_rests() {
        let cfg = CueConfig::default();
        let mut d = TruckDetector::new(cfg);
        let mut started = None;
        let mut ended = None;
        for k in 0..=90 {
            let t = k as f64 / 30.0;
            let x = 0.4 * t.min(1.0);
            match d.update(v(x, 0.55, 0.15), t) {
                Some(TruckUpdate::Started(_)) => started = Some(t),
                Some(TruckUpdate::Ended) => ended = Some(t),
                None => {}
            }
        }
        let (s, e) = (started.unwrap(), ended.unwrap());
        assert!(s >= 0.6 - 1e-9 && s < 0.7, "{s}");
        assert!(e >= 1.5 && e < 1.7, "{e}");
    }
}
