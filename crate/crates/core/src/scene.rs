//! Geometry shared by every other module: vectors, rays, level camera poses,
//! pinhole projection and the polar workspace of the camera rig.
//!
//! World frame is z-up, meters, with the rig base at the origin. The polar
//! workspace is centred on the rig's shoulder joint, `POLAR_ORIGIN_HEIGHT`
//! above the base. Azimuth `psi` is measured from the +y axis (toward the
//! workbench), counter-clockwise seen from above; `theta` is the elevation
//! above the horizontal plane.

use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::num::Real;

/// Height of the polar-coordinate origin above the rig base, in meters.
pub const POLAR_ORIGIN_HEIGHT: f64 = 0.333;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SceneError {
    #[error("degenerate pose: {0}")]
    DegeneratePose(&'static str),
    #[error("point is behind the camera")]
    BehindCamera,
    #[error("point coincides with the polar origin")]
    DegenerateRadius,
    #[error("ray direction has zero length")]
    DegenerateRay,
    #[error("invalid intrinsics: {0}")]
    InvalidIntrinsics(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec3<T> {
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T: Real> Vec3<T> {
    #[inline]
    pub const fn new(x: T, y: T, z: T) -> Self {
        Self { x, y, z }
    }

    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero(), T::zero())
    }

    pub fn unit_x() -> Self {
        Self::new(T::one(), T::zero(), T::zero())
    }

    pub fn unit_y() -> Self {
        Self::new(T::zero(), T::one(), T::zero())
    }

    pub fn unit_z() -> Self {
        Self::new(T::zero(), T::zero(), T::one())
    }

    /// Gravity direction, straight down.
    pub fn gravity() -> Self {
        Self::new(T::zero(), T::zero(), -T::one())
    }

    pub fn from_f64(v: Vec3<f64>) -> Self {
        Self::new(T::lit(v.x), T::lit(v.y), T::lit(v.z))
    }

    pub fn to_f64(self) -> Vec3<f64> {
        Vec3::new(self.x.as_f64(), self.y.as_f64(), self.z.as_f64())
    }

    #[inline]
    pub fn to_array(self) -> [T; 3] {
        [self.x, self.y, self.z]
    }

    pub fn dot(self, o: Self) -> T {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    #[inline]
    pub fn cross(self, o: Self) -> Self {
        Self::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    #[inline]
    pub fn norm_squared(self) -> T {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> T {
        self.norm_squared().sqrt()
    }

    pub fn distance(self, o: Self) -> T {
        (self - o).norm()
    }

    /// Unit vector in the same direction, or `None` for (near) zero vectors.
    pub fn normalized(self) -> Option<Self> {
        let n = self.norm();
        if n > T::tiny() && n.is_finite() {
            Some(self / n)
        } else {
            None
        }
    }

    /// Projection onto the ground (x-y) plane.
    pub fn horizontal(self) -> Self {
        Self::new(self.x, self.y, T::zero())
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn lerp(self, o: Self, t: T) -> Self {
        self + (o - self) * t
    }

    pub fn midpoint(self, o: Self) -> Self {
        (self + o) * T::lit(0.5)
    }

    /// Rotates `self` about the unit `axis` by `angle` (Rodrigues).
    pub fn rotated_about(self, axis: Self, angle: T) -> Self {
        let (s, c) = angle.sin_cos();
        self * c + axis.cross(self) * s + axis * (axis.dot(self) * (T::one() - c))
    }

    pub fn max_abs(self) -> T {
        self.x.abs().max(self.y.abs()).max(self.z.abs())
    }
}

impl<T: Real> Add for Vec3<T> {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl<T: Real> AddAssign for Vec3<T> {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl<T: Real> Sub for Vec3<T> {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl<T: Real> SubAssign for Vec3<T> {
    fn sub_assign(&mut self, o: Self) {
        *self = *self - o;
    }
}

impl<T: Real> Mul<T> for Vec3<T> {
    type Output = Self;
    #[inline]
    fn mul(self, s: T) -> Self {
        Self::new(self.x * s, self.y * s, self.z * s)
    }
}

impl<T: Real> Div<T> for Vec3<T> {
    type Output = Self;
    #[inline]
    fn div(self, s: T) -> Self {
        Self::new(self.x / s, self.y / s, self.z / s)
    }
}

impl<T: Real> Neg for Vec3<T> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y, -self.z)
    }
}

/// Half-line with a unit direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ray<T> {
    pub origin: Vec3<T>,
    pub direction: Vec3<T>,
}

impl<T: Real> Ray<T> {
    /// Builds a ray, normalizing `direction`.
    pub fn new(origin: Vec3<T>, direction: Vec3<T>) -> Result<Self, SceneError> {
        let direction = direction.normalized().ok_or(SceneError::DegenerateRay)?;
        Ok(Self { origin, direction })
    }

    pub fn at(&self, distance: T) -> Vec3<T> {
        self.origin + self.direction * distance
    }
}

/// Camera pose that always looks at something and keeps its horizontal image
/// axis parallel to the ground.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraPose<T> {
    pub position: Vec3<T>,
    pub forward: Vec3<T>,
    pub up: Vec3<T>,
    pub zoom: T,
}

impl<T: Real> CameraPose<T> {
    /// Pose at `position` looking at `target` with a level horizon.
    pub fn look_at(position: Vec3<T>, target: Vec3<T>) -> Result<Self, SceneError> {
        let forward = (target - position)
            .normalized()
            .ok_or(SceneError::DegeneratePose("position equals target"))?;
        Self::look_along(position, forward)
    }

    /// Pose looking along `forward`; fails when the view is vertical.
    pub fn look_along(position: Vec3<T>, forward: Vec3<T>) -> Result<Self, SceneError> {
        let forward = forward
            .normalized()
            .ok_or(SceneError::DegeneratePose("zero view direction"))?;
        let z = Vec3::unit_z();
        let up = (z - forward * forward.dot(z))
            .normalized()
            .ok_or(SceneError::DegeneratePose("view direction is vertical"))?;
        Ok(Self {
            position,
            forward,
            up,
            zoom: T::one(),
        })
    }

    /// Like [`CameraPose::look_along`], but a vertical view keeps the previous
    /// up vector re-orthogonalized against the new forward axis.
    pub fn look_along_or_keep(
        position: Vec3<T>,
        forward: Vec3<T>,
        last_up: Vec3<T>,
    ) -> Result<Self, SceneError> {
        match Self::look_along(position, forward) {
            Err(SceneError::DegeneratePose("view direction is vertical")) => {
                let forward = forward.normalized().ok_or(SceneError::DegeneratePose(
                    "zero view direction",
                ))?;
                // last_up must be level-compatible: strip its vertical part when the
                // view is vertical so the right axis stays horizontal.
                let candidate = last_up.horizontal();
                let up = (candidate - forward * forward.dot(candidate))
                    .normalized()
                    .ok_or(SceneError::DegeneratePose("no usable fallback up vector"))?;
                Ok(Self {
                    position,
                    forward,
                    up,
                    zoom: T::one(),
                })
            }
            other => other,
        }
    }

    pub fn look_at_or_keep(
        position: Vec3<T>,
        target: Vec3<T>,
        last_up: Vec3<T>,
    ) -> Result<Self, SceneError> {
        let forward = (target - position)
            .normalized()
            .ok_or(SceneError::DegeneratePose("position equals target"))?;
        Self::look_along_or_keep(position, forward, last_up)
    }

    /// Level pose whose view is tilted down by exactly the angle that puts
    /// `feature` on the upper third line of the frame.
    pub fn look_at_upper_third(
        position: Vec3<T>,
        feature: Vec3<T>,
        intrinsics: &CameraIntrinsics<T>,
        zoom: T,
    ) -> Result<Self, SceneError> {
        let base = Self::look_at(position, feature)?;
        let tilt = ((intrinsics.fov_v / T::lit(2.0)).tan() / (T::lit(3.0) * zoom)).atan();
        let right = base.right();
        let forward = base.forward.rotated_about(right, -tilt);
        let mut pose = Self::look_along_or_keep(position, forward, base.up)?;
        pose.zoom = zoom;
        Ok(pose)
    }

    pub fn with_zoom(mut self, zoom: T) -> Self {
        self.zoom = zoom;
        self
    }

    /// Horizontal image axis (pointing to the right of the frame).
    pub fn right(&self) -> Vec3<T> {
        self.forward.cross(self.up)
    }

    /// Re-orthonormalizes the frame, keeping `forward` as the primary axis.
    pub fn orthonormalized(&self) -> Result<Self, SceneError> {
        let mut pose = Self::look_along_or_keep(self.position, self.forward, self.up)?;
        pose.zoom = self.zoom;
        Ok(pose)
    }
}

/// Pinhole intrinsics expressed through the horizontal field of view.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics<T> {
    pub fov_h: T,
    pub fov_v: T,
    pub aspect: T,
}

impl<T: Real> CameraIntrinsics<T> {
    pub fn new(fov_h: T, aspect: T) -> Result<Self, SceneError> {
        if !(fov_h > T::zero() && fov_h < T::PI()) {
            return Err(SceneError::InvalidIntrinsics("fov_h must lie in (0, pi)"));
        }
        if !(aspect > T::zero()) || !aspect.is_finite() {
            return Err(SceneError::InvalidIntrinsics("aspect must be positive"));
        }
        let fov_v = T::lit(2.0) * ((fov_h / T::lit(2.0)).tan() / aspect).atan();
        Ok(Self {
            fov_h,
            fov_v,
            aspect,
        })
    }

    pub fn from_degrees(fov_h_deg: T, aspect: T) -> Result<Self, SceneError> {
        Self::new(fov_h_deg.to_radians(), aspect)
    }
}

impl<T: Real> Default for CameraIntrinsics<T> {
    /// 60 degree horizontal field of view at 16:9.
    fn default() -> Self {
        Self::from_degrees(T::lit(60.0), T::lit(16.0 / 9.0)).expect("valid default intrinsics")
    }
}

/// Normalized image coordinates: (0.5, 0.5) is the frame centre, v = 0 is the
/// top edge. Visible points fall in [0, 1]^2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImageCoord<T> {
    pub u: T,
    pub v: T,
}

impl<T: Real> ImageCoord<T> {
    pub fn is_visible(&self) -> bool {
        self.u >= T::zero() && self.u <= T::one() && self.v >= T::zero() && self.v <= T::one()
    }
}

/// Projects `point` through a pinhole camera; zoom multiplies the focal length.
pub fn project<T: Real>(
    pose: &CameraPose<T>,
    intrinsics: &CameraIntrinsics<T>,
    point: Vec3<T>,
) -> Result<ImageCoord<T>, SceneError> {
    let rel = point - pose.position;
    let depth = rel.dot(pose.forward);
    if depth <= T::zero() {
        return Err(SceneError::BehindCamera);
    }
    let half = T::lit(0.5);
    let x = rel.dot(pose.right()) / depth;
    let y = rel.dot(pose.up) / depth;
    let u = half + half * x * pose.zoom / (intrinsics.fov_h * half).tan();
    let v = half - half * y * pose.zoom / (intrinsics.fov_v * half).tan();
    Ok(ImageCoord { u, v })
}

/// Fraction of the frame width covered by the silhouette of a sphere.
///
/// Uses the true tangent cone: a sphere of radius `r` at depth `D` subtends a
/// half-angle `asin(r / D)`. The sphere centre is assumed to lie on the
/// horizontal image axis through the frame centre's column.
pub fn sphere_width_fraction<T: Real>(
    pose: &CameraPose<T>,
    intrinsics: &CameraIntrinsics<T>,
    center: Vec3<T>,
    radius: T,
) -> Result<T, SceneError> {
    let rel = center - pose.position;
    let dist = rel.norm();
    if dist <= radius {
        return Err(SceneError::BehindCamera);
    }
    // Rotate the centre direction about the up axis by +/- the half angle to get
    // the two tangent directions in the horizontal image plane.
    let half_angle = (radius / dist).asin();
    let dir = rel / dist;
    let axis = pose.up;
    let left = pose.position + dir.rotated_about(axis, half_angle);
    let right = pose.position + dir.rotated_about(axis, -half_angle);
    let a = project(pose, intrinsics, left)?;
    let b = project(pose, intrinsics, right)?;
    Ok((a.u - b.u).abs())
}

/// Spherical coordinates of a camera position around the rig's polar origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolarCoord<T> {
    /// Elevation above the horizontal plane, radians.
    pub theta: T,
    /// Azimuth from +y, counter-clockwise seen from above, radians.
    pub psi: T,
    /// Distance from the origin, meters.
    #[serde(rename = "R")]
    pub radius: T,
}

impl<T: Real> PolarCoord<T> {
    pub fn new(theta: T, psi: T, radius: T) -> Self {
        Self { theta, psi, radius }
    }

    pub fn as_array(&self) -> [T; 3] {
        [self.theta, self.psi, self.radius]
    }

    pub fn from_array(a: [T; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }
}

/// Polar origin for a rig whose base sits at `rig_base`.
pub fn polar_origin<T: Real>(rig_base: Vec3<T>) -> Vec3<T> {
    rig_base + Vec3::new(T::zero(), T::zero(), T::lit(POLAR_ORIGIN_HEIGHT))
}

pub fn to_polar<T: Real>(p: Vec3<T>, origin: Vec3<T>) -> Result<PolarCoord<T>, SceneError> {
    let d = p - origin;
    let radius = d.norm();
    if radius <= T::tiny() {
        return Err(SceneError::DegenerateRadius);
    }
    let theta = (d.z / radius).max(-T::one()).min(T::one()).asin();
    let psi = (-d.x).atan2(d.y);
    Ok(PolarCoord::new(theta, psi, radius))
}

pub fn from_polar<T: Real>(c: PolarCoord<T>, origin: Vec3<T>) -> Vec3<T> {
    let (st, ct) = c.theta.sin_cos();
    let (sp, cp) = c.psi.sin_cos();
    origin + Vec3::new(-ct * sp, ct * cp, st) * c.radius
}

/// Partial derivatives of [`from_polar`] with respect to (theta, psi, R).
pub fn polar_jacobian<T: Real>(c: PolarCoord<T>) -> [Vec3<T>; 3] {
    let (st, ct) = c.theta.sin_cos();
    let (sp, cp) = c.psi.sin_cos();
    let r = c.radius;
    [
        Vec3::new(st * sp, -st * cp, ct) * r,
        Vec3::new(-ct * cp, -ct * sp, T::zero()) * r,
        Vec3::new(-ct * sp, ct * cp, st),
    ]
}

/// Closed interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval<T> {
    pub min: T,
    pub max: T,
}

impl<T: Real> Interval<T> {
    pub fn new(min: T, max: T) -> Self {
        Self { min, max }
    }

    pub fn contains(&self, v: T) -> bool {
        v >= self.min && v <= self.max
    }

    pub fn clamp(&self, v: T) -> T {
        v.max(self.min).min(self.max)
    }

    pub fn span(&self) -> T {
        self.max - self.min
    }

    /// Distance from `v` to the nearest end of the interval.
    pub fn edge_distance(&self, v: T) -> T {
        (v - self.min).min(self.max - v)
    }
}

/// Box bounds of the polar workspace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolarBounds<T> {
    pub theta: Interval<T>,
    pub psi: Interval<T>,
    #[serde(rename = "R")]
    pub radius: Interval<T>,
}

/// Inset applied to the nominal workspace limits.
pub const BOUND_MARGIN: f64 = 1e-6;

impl<T: Real> Default for PolarBounds<T> {
    /// R in [0.36, 0.66] m, theta in [-pi/10, 0.4 pi], psi in [-0.4 pi, 0.4 pi],
    /// each shrunk by [`BOUND_MARGIN`].
    fn default() -> Self {
        let pi = T::PI();
        Self::nominal(
            Interval::new(-pi / T::lit(10.0), T::lit(0.4) * pi),
            Interval::new(-T::lit(0.4) * pi, T::lit(0.4) * pi),
            Interval::new(T::lit(0.36), T::lit(0.66)),
        )
    }
}

impl<T: Real> PolarBounds<T> {
    /// Bounds from nominal open limits, inset by [`BOUND_MARGIN`].
    pub fn nominal(theta: Interval<T>, psi: Interval<T>, radius: Interval<T>) -> Self {
        let m = T::lit(BOUND_MARGIN);
        let inset = |i: Interval<T>| Interval::new(i.min + m, i.max - m);
        Self {
            theta: inset(theta),
            psi: inset(psi),
            radius: inset(radius),
        }
    }

    /// Bounds shrunk by `linear` meters on R and `angular` radians on theta
    /// and psi.
    pub fn inset(&self, linear: T, angular: T) -> Self {
        let shrink = |i: Interval<T>, m: T| Interval::new(i.min + m, i.max - m);
        Self {
            theta: shrink(self.theta, angular),
            psi: shrink(self.psi, angular),
            radius: shrink(self.radius, linear),
        }
    }

    pub fn lower(&self) -> [T; 3] {
        [self.theta.min, self.psi.min, self.radius.min]
    }

    pub fn upper(&self) -> [T; 3] {
        [self.theta.max, self.psi.max, self.radius.max]
    }

    pub fn is_valid(&self) -> bool {
        self.theta.min <= self.theta.max
            && self.psi.min <= self.psi.max
            && self.radius.min <= self.radius.max
            && self.radius.min > T::zero()
    }

    pub fn contains(&self, c: &PolarCoord<T>) -> bool {
        self.theta.contains(c.theta) && self.psi.contains(c.psi) && self.radius.contains(c.radius)
    }

    pub fn clamp(&self, c: PolarCoord<T>) -> PolarCoord<T> {
        PolarCoord::new(
            self.theta.clamp(c.theta),
            self.psi.clamp(c.psi),
            self.radius.clamp(c.radius),
        )
    }

    /// Clamps a Cartesian position into the workspace around `origin`.
    pub fn clamp_position(&self, p: Vec3<T>, origin: Vec3<T>) -> Vec3<T> {
        match to_polar(p, origin) {
            Ok(c) if self.contains(&c) => p,
            Ok(c) => from_polar(self.clamp(c), origin),
            Err(_) => from_polar(
                PolarCoord::new(self.theta.clamp(T::zero()), self.psi.clamp(T::zero()), self.radius.min),
                origin,
            ),
        }
    }

    /// True when `c` is within `linear_eps` meters (radius) or `angular_eps`
    /// radians (theta, psi) of any bound.
    pub fn near_boundary(&self, c: &PolarCoord<T>, linear_eps: T, angular_eps: T) -> bool {
        self.radius.edge_distance(c.radius) < linear_eps
            || self.theta.edge_distance(c.theta) < angular_eps
            || self.psi.edge_distance(c.psi) < angular_eps
    }
}
