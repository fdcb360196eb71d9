//! Parametric 3-D hand used to generate labeled landmark fixtures.
//!
//! Each finger is a chain of three segments in the hand's sagittal plane;
//! curling a finger flexes all three joints together. The hand is rotated,
//! projected orthographically onto the image plane, scaled, shifted and
//! optionally perturbed with Gaussian noise.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::{Hand, HandKeypoints};

/// Base joints (x, y) of thumb, index, middle, ring, pinky, meters.
const BASES: [[f64; 2]; 5] = [[0.020, 0.020], [0.022, 0.085], [0.004, 0.090], [-0.014, 0.085], [-0.030, 0.075]];

/// Segment lengths from base to tip.
const SEGMENTS: [[f64; 3]; 5] = [
    [0.035, 0.030, 0.025],
    [0.039, 0.024, 0.020],
    [0.044, 0.028, 0.022],
    [0.041, 0.027, 0.021],
    [0.032, 0.019, 0.018],
];

/// Joint flexion at full curl, radians (base, middle, distal joint).
const FULL_FLEX: [f64; 3] = [1.571, 1.745, 1.222];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HandShape {
    Point,
    Fist,
    Open,
    Peace,
    Relaxed,
    Grip,
    HalfPoint,
}

impl HandShape {
    pub const ALL: [HandShape; 7] = [
        HandShape::Point,
        HandShape::Fist,
        HandShape::Open,
        HandShape::Peace,
        HandShape::Relaxed,
        HandShape::Grip,
        HandShape::HalfPoint,
    ];

    /// Curl of thumb, index, middle, ring, pinky in [0, 1].
    pub fn curl(self) -> [f64; 5] {
        match self {
            HandShape::Point => [0.8, 0.0, 1.0, 1.0, 1.0],
            HandShape::Fist => [0.8, 1.0, 1.0, 1.0, 1.0],
            HandShape::Open => [0.0, 0.0, 0.0, 0.0, 0.0],
            HandShape::Peace => [0.8, 0.0, 0.0, 1.0, 1.0],
            HandShape::Relaxed => [0.3, 0.4, 0.5, 0.55, 0.6],
            HandShape::Grip => [0.5, 0.65, 0.65, 0.65, 0.65],
            HandShape::HalfPoint => [0.7, 0.6, 1.0, 1.0, 1.0],
        }
    }

    pub fn is_pointing(self) -> bool {
        self == HandShape::Point
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HandPose {
    pub curl: [f64; 5],
    /// In-plane rotation, radians.
    pub yaw: f64,
    /// Tilt of the fingers toward the camera, radians.
    pub pitch: f64,
    /// Rotation about the finger axis, radians.
    pub roll: f64,
    pub scale: f64,
    pub offset: [f64; 2],
}

impl HandPose {
    pub fn shape(shape: HandShape) -> Self {
        Self {
            curl: shape.curl(),
            yaw: 0.0,
            pitch: 0.0,
            roll: 0.0,
            scale: 1.0,
            offset: [0.0, 0.0],
        }
    }

    /// Randomized instance of `shape`: curls jittered by up to 0.12, random
    /// orientation, scale and placement.
    pub fn random<R: Rng>(shape: HandShape, rng: &mut R) -> Self {
        let mut curl = shape.curl();
        for c in &mut curl {
            *c = (*c + rng.gen_range(-0.12..0.12)).clamp(0.0, 1.0);
        }
        Self {
            curl,
            yaw: rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI),
            pitch: rng.gen_range(-0.8..0.8),
            roll: rng.gen_range(-0.5..0.5),
            scale: rng.gen_range(0.5..2.0),
            offset: [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)],
        }
    }

    /// 3-D landmarks in the hand frame (fingers along +y, palm facing +z).
    pub fn landmarks_3d(&self) -> Vec<[f64; 3]> {
        let mut pts = Vec::with_capacity(21);
        pts.push([0.0, 0.0, 0.0]);
        for finger in 0..5 {
            let [bx, by] = BASES[finger];
            let mut p = [bx, by, 0.0];
            pts.push(p);
            let mut flex = 0.0;
            for (seg, len) in SEGMENTS[finger].iter().enumerate() {
                flex += self.curl[finger] * FULL_FLEX[seg];
                let dir = if finger == 0 {
                    // The thumb leaves the palm sideways and folds across it.
                    let (s, c) = flex.sin_cos();
                    [0.6 * c - 0.8 * s * 0.7, 0.8 * c, -0.8 * s * 0.7]
                } else {
                    [0.0, flex.cos(), -flex.sin()]
                };
                p = [p[0] + len * dir[0], p[1] + len * dir[1], p[2] + len * dir[2]];
                pts.push(p);
            }
        }
        pts
    }

    /// Image-plane landmarks without noise.
    pub fn keypoints(&self) -> Vec<[f64; 2]> {
        let (sy, cy) = self.yaw.sin_cos();
        let (sp, cp) = self.pitch.sin_cos();
        let (sr, cr) = self.roll.sin_cos();
        self.landmarks_3d()
            .into_iter()
            .map(|[x, y, z]| {
                // Roll about y, then pitch about x, then yaw about z.
                let (x, z) = (cr * x + sr * z, -sr * x + cr * z);
                let (y, _z) = (cp * y - sp * z, sp * y + cp * z);
                let (x, y) = (cy * x - sy * y, sy * x + cy * y);
                [self.offset[0] + self.scale * x, self.offset[1] + self.scale * y]
            })
            .collect()
    }

    /// Landmarks with isotropic Gaussian noise of `sigma` hand-frame meters.
    pub fn noisy_keypoints<R: Rng>(&self, sigma: f64, rng: &mut R) -> Vec<[f64; 2]> {
        let noise = Normal::new(0.0, sigma * self.scale).expect("sigma must be finite and >= 0");
        self.keypoints()
            .into_iter()
            .map(|[x, y]| [x + noise.sample(rng), y + noise.sample(rng)])
            .collect()
    }
}

/// Labeled fixture frame.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledHand {
    pub keypoints: HandKeypoints,
    pub shape: HandShape,
    pub pointing: bool,
}

/// `n` frames cycling through every shape with random pose and 2 mm noise.
/// Half of the frames are pointing hands.
pub fn labeled_corpus<R: Rng>(n: usize, rng: &mut R) -> Vec<LabeledHand> {
    let others = &HandShape::ALL[1..];
    (0..n)
        .map(|i| {
            let shape = if i % 2 == 0 {
                HandShape::Point
            } else {
                others[(i / 2) % others.len()]
            };
            let pose = HandPose::random(shape, rng);
            let hand = if rng.gen_bool(0.5) { Hand::Left } else { Hand::Right };
            LabeledHand {
                keypoints: HandKeypoints {
                    hand,
                    points: pose.noisy_keypoints(0.002, rng),
                    timestamp: i as f64 / 30.0,
                },
                shape,
                pointing: shape.is_pointing(),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn straight_fingers_have_their_segment_lengths() {
        let p = HandPose::shape(HandShape::Open).landmarks_3d();
        for f in 1..5 {
            let b = 1 + 4 * f;
            let tip = p[b + 3];
            let len: f64 = SEGMENTS[f].iter().sum();
            assert!((tip[1] - p[b][1] - len).abs() < 1e-12);
        }
    }

    #[test]
    fn fist_tips_fold_back_toward_the_wrist() {
        let p = HandPose::shape(HandShape::Fist).landmarks_3d();
        for f in 1..5 {
            let b = 1 + 4 * f;
            assert!(p[b + 3][1] < p[b][1]);
        }
    }
}
