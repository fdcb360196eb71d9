//! Geometric pointing classifier over 2-D hand landmarks.

use super::{CueError, GestureLabel, GestureScore, HandKeypoints};

/// Acceptance threshold on the pointing confidence.
pub const POINTING_THRESHOLD: f64 = 0.85;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Finger {
    Thumb,
    Index,
    Middle,
    Ring,
    Pinky,
}

impl Finger {
    /// Landmark indices from the base joint to the tip.
    pub fn landmarks(self) -> [usize; 4] {
        let base = 1 + 4 * self as usize;
        [base, base + 1, base + 2, base + 3]
    }
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// How far a finger reaches beyond its base joint, as a fraction of its own
/// length: 1 for a straight finger continuing the wrist-to-base line, 0 when
/// the tip is no farther from the wrist than the base joint.
pub fn finger_extension(points: &[[f64; 2]], finger: Finger) -> f64 {
    let [b, m, d, t] = finger.landmarks();
    let wrist = points[0];
    let length = dist(points[b], points[m]) + dist(points[m], points[d]) + dist(points[d], points[t]);
    if !(length > 0.0) {
        return 0.0;
    }
    ((dist(points[t], wrist) - dist(points[b], wrist)) / length).clamp(0.0, 1.0)
}

/// Cubic Hermite step from 0 at `lo` to 1 at `hi`.
pub fn smoothstep(lo: f64, hi: f64, x: f64) -> f64 {
    let t = ((x - lo) / (hi - lo)).clamp(0.0, 1.0);
    t * t * (3.0 - 2.0 * t)
}

/// Scores how much a hand looks like it is pointing: the index finger must be
/// extended and the middle, ring and pinky fingers curled. The thumb is
/// ignored.
pub fn classify_gesture(kp: &HandKeypoints) -> Result<GestureScore, CueError> {
    let n = kp.normalized()?;
    let index = finger_extension(&n.points, Finger::Index);
    let others = [Finger::Middle, Finger::Ring, Finger::Pinky]
        .into_iter()
        .map(|f| finger_extension(&n.points, f))
        .fold(0.0, f64::max);
    let confidence = smoothstep(0.3, 0.8, index) * (1.0 - smoothstep(0.2, 0.6, others));
    let label = if confidence >= POINTING_THRESHOLD {
        GestureLabel::Pointing
    } else {
        GestureLabel::Other
    };
    Ok(GestureScore { label, confidence })
}
