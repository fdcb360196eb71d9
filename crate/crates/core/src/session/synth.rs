//! Parametric instructor and scripted scenarios. Fixtures are generated from
//! code with a seeded RNG, so every trace is reproducible from its seed.

use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::trace::{SessionTrace, TraceHeader, TraceRecord};
use super::SessionError;
use crate::cue::hand_model::{HandPose, HandShape};
use crate::cue::{Hand, HandKeypoints, Joint, SkeletonFrame};
use crate::director::Aabb;
use crate::scene::{CameraIntrinsics, Vec3};

type V3 = Vec3<f64>;

/// Where things stand in the studio. The instructor faces the rig (-y), so
/// their left hand is on the +x side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StudioLayout {
    pub rig_base: V3,
    pub workbench: Aabb,
    pub head: V3,
    pub eyes: V3,
    pub shoulder_l: V3,
    pub shoulder_r: V3,
    pub wrist_l: V3,
    pub wrist_r: V3,
    pub fingertip_l: V3,
    pub fingertip_r: V3,
}

impl Default for StudioLayout {
    fn default() -> Self {
        Self {
            rig_base: V3::zero(),
            workbench: Aabb {
                min: V3::new(-0.6, 0.3, -0.1),
                max: V3::new(0.6, 1.0, 0.35),
            },
            head: V3::new(0.0, 0.80, 0.60),
            eyes: V3::new(0.0, 0.78, 0.52),
            shoulder_l: V3::new(0.18, 0.80, 0.40),
            shoulder_r: V3::new(-0.18, 0.80, 0.40),
            wrist_l: V3::new(0.10, 0.70, 0.16),
            wrist_r: V3::new(-0.10, 0.70, 0.16),
            fingertip_l: V3::new(0.08, 0.60, 0.16),
            fingertip_r: V3::new(-0.08, 0.60, 0.16),
        }
    }
}

impl StudioLayout {
    fn rest(&self, hand: Hand) -> (V3, V3) {
        match hand {
            Hand::Left => (self.wrist_l, self.fingertip_l),
            Hand::Right => (self.wrist_r, self.fingertip_r),
        }
    }

    fn shoulder(&self, hand: Hand) -> V3 {
        match hand {
            Hand::Left => self.shoulder_l,
            Hand::Right => self.shoulder_r,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case")]
pub enum ScriptAction {
    /// Index finger aimed at `target`.
    Point { hand: Hand, target: V3 },
    /// Moves the hand by `offset` over the event window; the offset is held
    /// while a `Point` of the same hand that covers the end is still going.
    Sweep { hand: Hand, offset: V3 },
    /// Fingertip lifted above the shoulder.
    Raise { hand: Hand },
    /// Hand leaves the sensor's view.
    Hide { hand: Hand },
    /// Utterance spoken at the event start.
    Say { text: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptEvent {
    pub start: f64,
    pub end: f64,
    #[serde(flatten)]
    pub action: ScriptAction,
}

impl ScriptEvent {
    pub fn new(start: f64, end: f64, action: ScriptAction) -> Self {
        Self { start, end, action }
    }

    fn covers(&self, t: f64) -> bool {
        t >= self.start && t < self.end
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Script {
    pub duration: f64,
    /// Skeleton and hand keypoint rate, Hz.
    pub frame_hz: f64,
    /// Joint jitter standard deviation, meters.
    pub joint_noise: f64,
    /// Hand landmark noise standard deviation, hand-frame meters.
    pub keypoint_noise: f64,
    pub events: Vec<ScriptEvent>,
}

impl Script {
    pub fn new(duration: f64) -> Self {
        Self {
            duration,
            frame_hz: 30.0,
            joint_noise: 0.001,
            keypoint_noise: 0.002,
            events: Vec::new(),
        }
    }

    pub fn at(mut self, start: f64, end: f64, action: ScriptAction) -> Self {
        self.events.push(ScriptEvent::new(start, end, action));
        self
    }

    pub fn say(self, t: f64, text: &str) -> Self {
        self.at(t, t, ScriptAction::Say { text: text.into() })
    }

    /// Repeats the script `n` times back to back.
    pub fn repeated(&self, n: usize) -> Self {
        let mut out = Self {
            duration: self.duration * n as f64,
            events: Vec::new(),
            ..self.clone()
        };
        for k in 0..n {
            let shift = self.duration * k as f64;
            out.events.extend(self.events.iter().map(|e| ScriptEvent {
                start: e.start + shift,
                end: e.end + shift,
                ..e.clone()
            }));
        }
        out
    }

    fn active(&self, t: f64, pred: impl Fn(&ScriptAction) -> bool) -> Option<&ScriptEvent> {
        self.events.iter().find(|e| e.covers(t) && pred(&e.action))
    }

    /// Wrist, fingertip and hand shape at time `t`; `None` while hidden.
    fn hand_state(&self, layout: &StudioLayout, hand: Hand, t: f64) -> Option<(V3, V3, HandShape)> {
        if self.active(t, |a| matches!(a, ScriptAction::Hide { hand: h } if *h == hand)).is_some() {
            return None;
        }
        let (wrist, tip) = layout.rest(hand);
        if self.active(t, |a| matches!(a, ScriptAction::Raise { hand: h } if *h == hand)).is_some() {
            let sh = layout.shoulder(hand);
            return Some((sh + V3::new(0.0, -0.05, 0.05), sh + V3::new(0.0, -0.05, 0.18), HandShape::Open));
        }
        let point = self.active(t, |a| matches!(a, ScriptAction::Point { hand: h, .. } if *h == hand));
        let Some(point) = point else {
            return Some((wrist, tip, HandShape::Grip));
        };
        let ScriptAction::Point { target, .. } = point.action else { unreachable!() };
        let dir = (target - wrist).normalized().unwrap_or(V3::unit_y());
        let mut shift = V3::zero();
        for e in &self.events {
            let ScriptAction::Sweep { hand: h, offset } = e.action else { continue };
            if h != hand || t < e.start {
                continue;
            }
            if t < e.end {
                shift = shift + offset * ((t - e.start) / (e.end - e.start));
            } else if point.covers(e.end) {
                shift = shift + offset;
            }
        }
        Some((wrist + shift, wrist + shift + dir * 0.1, HandShape::Point))
    }

    /// Renders the script into a trace.
    pub fn generate(&self, layout: &StudioLayout, intrinsics: CameraIntrinsics<f64>, seed: u64) -> SessionTrace {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let jitter = Normal::new(0.0, self.joint_noise.max(0.0)).expect("finite noise");
        let mut header = TraceHeader::new(intrinsics, *layout);
        header.duration = Some(self.duration);
        let mut trace = SessionTrace::new(header);

        let mut says: Vec<(f64, &str)> = self
            .events
            .iter()
            .filter_map(|e| match &e.action {
                ScriptAction::Say { text } => Some((e.start, text.as_str())),
                _ => None,
            })
            .collect();
        says.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut says = says.into_iter().peekable();

        let frames = (self.duration * self.frame_hz).floor() as u64;
        for k in 0..=frames {
            let t = k as f64 / self.frame_hz;
            while let Some((_, text)) = says.next_if(|(ts, _)| *ts <= t) {
                // Spoken between frames: stamped with the frame that follows.
                trace.push(TraceRecord::Utterance {
                    timestamp: t,
                    text: text.to_string(),
                });
            }
            let mut noisy = |p: V3| p + V3::new(jitter.sample(&mut rng), jitter.sample(&mut rng), jitter.sample(&mut rng));
            let mut frame = SkeletonFrame::new(t)
                .with(Joint::Head, noisy(layout.head))
                .with(Joint::Eyes, noisy(layout.eyes))
                .with(Joint::ShoulderL, noisy(layout.shoulder_l))
                .with(Joint::ShoulderR, noisy(layout.shoulder_r));
            let mut hands = Vec::new();
            for hand in Hand::BOTH {
                match self.hand_state(layout, hand, t) {
                    Some((wrist, tip, shape)) => {
                        frame.set(hand.wrist(), noisy(wrist), true);
                        frame.set(hand.fingertip(), noisy(tip), true);
                        hands.push((hand, shape));
                    }
                    None => {
                        let (wrist, tip) = layout.rest(hand);
                        frame.set(hand.wrist(), wrist, false);
                        frame.set(hand.fingertip(), tip, false);
                    }
                }
            }
            trace.push(TraceRecord::Skeleton(frame));
            for (hand, shape) in hands {
                trace.push(TraceRecord::Hand(HandKeypoints {
                    hand,
                    points: HandPose::shape(shape).noisy_keypoints(self.keypoint_noise, &mut rng),
                    timestamp: t,
                }));
            }
        }
        trace
    }
}

/// Built-in scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    /// Point, raise a hand, ask for a closer look, hide a hand.
    Lego,
    /// Hands resting on the bench for 30 s.
    Stationary,
    /// Every cue the director understands, once.
    Full,
    /// The full script repeated for five minutes.
    FiveMinute,
    Orbit,
    Truck,
}

impl Scenario {
    pub const ALL: [Scenario; 6] = [
        Scenario::Lego,
        Scenario::Stationary,
        Scenario::Full,
        Scenario::FiveMinute,
        Scenario::Orbit,
        Scenario::Truck,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Lego => "lego",
            Scenario::Stationary => "stationary",
            Scenario::Full => "full",
            Scenario::FiveMinute => "five-minute",
            Scenario::Orbit => "orbit",
            Scenario::Truck => "truck",
        }
    }

    pub fn script(self) -> Script {
        use ScriptAction::*;
        let target = V3::new(0.0, 0.55, 0.10);
        match self {
            Scenario::Lego => Script::new(16.0)
                .at(2.0, 5.0, Point { hand: Hand::Right, target })
                .at(7.0, 9.0, Raise { hand: Hand::Left })
                .say(10.0, "could you look closer at this brick")
                .at(12.0, 13.0, Hide { hand: Hand::Right }),
            Scenario::Stationary => Script::new(30.0),
            Scenario::Full => full_script(target),
            Scenario::FiveMinute => full_script(target).repeated(10),
            Scenario::Orbit => Script::new(10.0)
                .at(1.0, 8.0, Point { hand: Hand::Left, target: V3::new(0.05, 0.5, 0.1) })
                .at(1.5, 8.0, Point { hand: Hand::Right, target: V3::new(-0.05, 0.5, 0.1) }),
            Scenario::Truck => Script::new(8.0)
                .at(1.0, 6.0, Point { hand: Hand::Right, target })
                .at(2.5, 3.5, Sweep { hand: Hand::Right, offset: V3::new(0.4, 0.0, 0.0) }),
        }
    }
}

fn full_script(target: V3) -> Script {
    use ScriptAction::*;
    Script::new(30.0)
        .at(2.0, 4.0, Point { hand: Hand::Right, target })
        .at(5.0, 7.0, Raise { hand: Hand::Right })
        .say(7.5, "zoom in so they can see")
        .say(8.5, "now show it from the top")
        .at(9.0, 10.0, Hide { hand: Hand::Left })
        .at(13.0, 19.0, Point { hand: Hand::Left, target: V3::new(0.05, 0.5, 0.1) })
        .at(13.5, 19.0, Point { hand: Hand::Right, target: V3::new(-0.05, 0.5, 0.1) })
        .at(20.0, 24.0, Point { hand: Hand::Right, target })
        .at(21.0, 22.0, Sweep { hand: Hand::Right, offset: V3::new(0.4, 0.0, 0.0) })
        .say(25.0, "let's keep going")
}

impl FromStr for Scenario {
    type Err = SessionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Scenario::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| SessionError::UnknownScenario(s.into()))
    }
}

/// Trace for a built-in scenario with the default layout and intrinsics.
pub fn generate(scenario: Scenario, seed: u64) -> SessionTrace {
    scenario
        .script()
        .generate(&StudioLayout::default(), CameraIntrinsics::default(), seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cue::{classify_gesture, GestureLabel};

    #[test]
    fn same_seed_same_trace() {
        assert_eq!(generate(Scenario::Lego, 3), generate(Scenario::Lego, 3));
        assert_ne!(generate(Scenario::Lego, 3), generate(Scenario::Lego, 4));
    }

    #[test]
    fn generated_traces_are_valid_and_sorted() {
        for s in Scenario::ALL {
            let t = generate(s, 1);
            t.validate().unwrap();
            assert!((t.end_time() - s.script().duration).abs() < 0.05, "{s:?}");
        }
    }

    #[test]
    fn scenario_names_parse() {
        for s in Scenario::ALL {
            assert_eq!(s.name().parse::<Scenario>().unwrap(), s);
        }
        assert!("nope".parse::<Scenario>().is_err());
    }

    #[test]
    fn pointing_shape_classifies_as_pointing() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for (shape, want) in [(HandShape::Point, true), (HandShape::Grip, false), (HandShape::Open, false)] {
            for _ in 0..50 {
                let kp = HandKeypoints {
                    hand: Hand::Left,
                    points: HandPose::shape(shape).noisy_keypoints(0.002, &mut rng),
                    timestamp: 0.0,
                };
                let got = classify_gesture(&kp).unwrap().label == GestureLabel::Pointing;
                assert_eq!(got, want, "{shape:?}");
            }
        }
    }

    #[test]
    fn sweep_moves_the_pointing_hand() {
        let s = Scenario::Truck.script();
        let layout = StudioLayout::default();
        let (_, before, _) = s.hand_state(&layout, Hand::Right, 2.0).unwrap();
        let (_, mid, _) = s.hand_state(&layout, Hand::Right, 3.0).unwrap();
        let (_, after, shape) = s.hand_state(&layout, Hand::Right, 4.0).unwrap();
        assert!(((mid - before).x - 0.2).abs() < 1e-9);
        assert!(((after - before).x - 0.4).abs() < 1e-9);
        assert_eq!(shape, HandShape::Point);
        // Back at rest once the point ends.
        let (_, rest, _) = s.hand_state(&layout, Hand::Right, 7.0).unwrap();
        assert_eq!(rest, layout.fingertip_r);
    }

    #[test]
    fn raised_tip_is_above_the_shoulder_and_hidden_hands_vanish() {
        let s = Scenario::Lego.script();
        let layout = StudioLayout::default();
        let (_, tip, _) = s.hand_state(&layout, Hand::Left, 8.0).unwrap();
        assert!(tip.z > layout.shoulder_l.z);
        assert!(s.hand_state(&layout, Hand::Right, 12.5).is_none());
    }
}
