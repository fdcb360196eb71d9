//! Orbit paths: a fixed-distance, fixed-elevation arc around a center point.

use serde::{Deserialize, Serialize};

use super::{PlannerConfig, PlannerError};
use crate::num::Real;
use crate::scene::{to_polar, CameraPose, Vec3};

/// How the configured orbit pitch is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrbitPitchConvention {
    /// Angle of the line of sight below the center's horizontal plane.
    #[default]
    Elevation,
    /// Angle of the line of sight from the vertical.
    FromVertical,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, bound(serialize = "T: Serialize", deserialize = "T: Real + Deserialize<'de>"))]
pub struct OrbitConfig<T> {
    /// Camera-to-center distance, meters.
    pub distance: T,
    pub pitch: T,
    pub pitch_convention: OrbitPitchConvention,
    /// Azimuth swept by the orbit, radians.
    pub arc: T,
    /// Number of planner ticks the orbit takes (waypoints = steps + 1).
    pub steps: usize,
}

impl<T: Real> Default for OrbitConfig<T> {
    fn default() -> Self {
        Self {
            distance: T::lit(0.6),
            pitch: T::PI() / T::lit(6.0),
            pitch_convention: OrbitPitchConvention::Elevation,
            arc: T::FRAC_PI_4(),
            steps: 20,
        }
    }
}

impl<T: Real> OrbitConfig<T> {
    /// Elevation of the camera above the center's horizontal plane.
    pub fn elevation(&self) -> T {
        match self.pitch_convention {
            OrbitPitchConvention::Elevation => self.pitch,
            OrbitPitchConvention::FromVertical => T::FRAC_PI_2() - self.pitch,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitPath<T> {
    pub center: Vec3<T>,
    pub waypoints: Vec<CameraPose<T>>,
    /// Indices of waypoints that had to be pulled into the workspace.
    pub clamped: Vec<usize>,
    /// +1 for increasing azimuth, -1 for decreasing.
    pub direction: i8,
    pub start_azimuth: T,
}

impl<T: Real> OrbitPath<T> {
    /// Waypoint for a given orbit progress in radians of azimuth.
    pub fn at_progress(&self, progress: T, arc: T) -> &CameraPose<T> {
        let n = self.waypoints.len() - 1;
        let f = (progress / arc).max(T::zero()).min(T::one());
        let idx = (f * T::lit(n as f64)).round().to_usize().unwrap_or(n).min(n);
        &self.waypoints[idx]
    }
}

/// Azimuth of a horizontal offset, measured like the polar `psi`.
fn azimuth<T: Real>(offset: Vec3<T>) -> T {
    (-offset.x).atan2(offset.y)
}

/// Waypoints spanning the configured arc around `center`, starting at the
/// azimuth of `current_cam`. Each looks at the center; waypoints outside the
/// workspace are clamped and listed in `clamped`. The sweep direction with
/// fewer clamped waypoints wins (increasing azimuth on ties).
pub fn orbit_waypoints<T: Real>(
    center: Vec3<T>,
    current_cam: Vec3<T>,
    cfg: &PlannerConfig<T>,
) -> Result<OrbitPath<T>, PlannerError> {
    let orbit = &cfg.orbit;
    if orbit.steps == 0 || !(orbit.distance > T::zero()) {
        return Err(PlannerError::InvalidConfig("orbit needs steps > 0 and distance > 0".into()));
    }
    let elevation = orbit.elevation();
    let ring = orbit.distance * elevation.cos();
    let lift = orbit.distance * elevation.sin();

    let offset = (current_cam - center).horizontal();
    let start = if offset.norm() > T::tiny() {
        azimuth(offset)
    } else {
        azimuth((cfg.rig_base - center).horizontal())
    };

    let origin = cfg.origin();
    let build = |direction: T| {
        let mut waypoints = Vec::with_capacity(orbit.steps + 1);
        let mut clamped = Vec::new();
        let mut last_up = Vec3::unit_z();
        for k in 0..=orbit.steps {
            let phi = start + direction * orbit.arc * T::lit(k as f64) / T::lit(orbit.steps as f64);
            let mut p = center + Vec3::new(-phi.sin() * ring, phi.cos() * ring, lift);
            let inside = to_polar(p, origin)
                .map(|c| cfg.bounds.contains(&c))
                .unwrap_or(false);
            if !inside {
                clamped.push(k);
                p = cfg.bounds.clamp_position(p, origin);
            }
            let pose = CameraPose::look_at_or_keep(p, center, last_up)?;
            last_up = pose.up;
            waypoints.push(pose);
        }
        Ok::<_, PlannerError>((waypoints, clamped))
    };

    let (fw, fc) = build(T::one())?;
    let (bw, bc) = build(-T::one())?;
    let (waypoints, clamped, direction) = if bc.len() < fc.len() {
        (bw, bc, -1)
    } else {
        (fw, fc, 1)
    };
    if clamped.len() == waypoints.len() {
        return Err(PlannerError::UnreachableOrbit);
    }
    Ok(OrbitPath {
        center,
        waypoints,
        clamped,
        direction,
        start_azimuth: start,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_4, FRAC_PI_6};

    fn bench_center() -> Vec3<f64> {
        Vec3::new(0.0, 0.85, 0.2)
    }

    #[test]
    fn waypoints_keep_distance_elevation_and_span() {
        let cfg = PlannerConfig::<f64>::default();
        let center = bench_center();
        // Camera between the rig and the center.
        let cam = Vec3::new(0.0, 0.3, 0.5);
        let path = orbit_waypoints(center, cam, &cfg).unwrap();
        assert_eq!(path.waypoints.len(), cfg.orbit.steps + 1);
        assert!(path.clamped.is_empty(), "clamped {:?}", path.clamped);
        let az: Vec<f64> = path
            .waypoints
            .iter()
            .map(|w| azimuth((w.position - center).horizontal()))
            .collect();
        assert!((az[0] - azimuth((cam - center).horizontal())).abs() < 1e-12);
        assert!(((az.last().unwrap() - az[0]).abs() - FRAC_PI_4).abs() < 1e-12);
        for w in &path.waypoints {
            let rel = center - w.position;
            assert!((rel.norm() - 0.6).abs() < 1e-6);
            let elev = (-rel.z / rel.norm()).asin();
            assert!((elev - FRAC_PI_6).abs() < 1e-6);
            assert!((w.forward - rel / rel.norm()).norm() < 1e-12);
        }
        let steps: Vec<f64> = az.windows(2).map(|p| p[1] - p[0]).collect();
        assert!(steps.iter().all(|s| (s - steps[0]).abs() < 1e-12));
        assert!(steps.iter().all(|s| s.signum() == steps[0].signum()));
    }

    #[test]
    fn from_vertical_convention() {
        let mut cfg = PlannerConfig::<f64>::default();
        cfg.orbit.pitch_convention = OrbitPitchConvention::FromVertical;
        assert!((cfg.orbit.elevation() - std::f64::consts::FRAC_PI_3).abs() < 1e-12);
    }

    #[test]
    fn center_above_rig_is_unreachable() {
        let cfg = PlannerConfig::<f64>::default();
        let err = orbit_waypoints(Vec3::new(0.0, 0.0, 1.0), Vec3::new(0.0, 0.4, 0.5), &cfg).unwrap_err();
        assert_eq!(err, PlannerError::UnreachableOrbit);
    }

    #[test]
    fn partially_reachable_orbit_reports_clamps() {
        let cfg = PlannerConfig::<f64>::default();
        let center = Vec3::new(0.0, 1.05, 0.2);
        let path = orbit_waypoints(center, Vec3::new(0.0, 0.5, 0.5), &cfg).unwrap();
        assert!(!path.clamped.is_empty());
        for w in &path.waypoints {
            let c = to_polar(w.position, cfg.origin()).unwrap();
            assert!(c.radius <= cfg.bounds.radius.max + 1e-12);
        }
    }
}
