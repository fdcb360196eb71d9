//! Exhaustive grid minimizer over the polar box. Independent of the solver
//! path: it evaluates the cost directly and shares nothing with the gradient
//! code.

use serde::{Deserialize, Serialize};

use super::{cost, PlannerConfig, PlannerError, PlanningContext};
use crate::num::Real;
use crate::scene::{from_polar, PolarCoord, Vec3};

/// Largest grid the oracle will evaluate.
pub const MAX_GRID_POINTS: u128 = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridResolution<T> {
    /// Maximum spacing along R, meters.
    pub radius_step: T,
    /// Maximum spacing along theta and psi, radians.
    pub angle_step: T,
}

impl<T: Real> Default for GridResolution<T> {
    /// 1 cm and 1 degree.
    fn default() -> Self {
        Self {
            radius_step: T::lit(0.01),
            angle_step: T::lit(1.0f64.to_radians()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridOutcome<T> {
    pub position: Vec3<T>,
    pub polar: PolarCoord<T>,
    pub value: T,
    pub points: usize,
}

fn axis<T: Real>(min: T, max: T, step: T) -> Vec<T> {
    let span = max - min;
    if !(span > T::zero()) {
        return vec![min];
    }
    let n = (span / step).ceil().to_usize().unwrap_or(0).max(1) + 1;
    (0..n)
        .map(|i| {
            if i + 1 == n {
                max
            } else {
                min + span * T::lit(i as f64) / T::lit((n - 1) as f64)
            }
        })
        .collect()
}

fn axis_len<T: Real>(min: T, max: T, step: T) -> u128 {
    let span = max - min;
    if !(span > T::zero()) {
        return 1;
    }
    (span / step).ceil().to_u128().unwrap_or(u128::MAX / 4) + 1
}

/// Exhaustive argmin of the cost over an evenly spaced grid that includes the
/// box corners. Ties resolve to the first point in (theta, psi, R)
/// lexicographic order.
pub fn grid_oracle<T: Real>(
    ctx: &PlanningContext<T>,
    cfg: &PlannerConfig<T>,
    resolution: &GridResolution<T>,
) -> Result<GridOutcome<T>, PlannerError> {
    let b = &cfg.bounds;
    if !(resolution.radius_step > T::zero() && resolution.angle_step > T::zero()) {
        return Err(PlannerError::InvalidConfig("grid steps must be positive".into()));
    }
    let points = axis_len(b.theta.min, b.theta.max, resolution.angle_step)
        .saturating_mul(axis_len(b.psi.min, b.psi.max, resolution.angle_step))
        .saturating_mul(axis_len(b.radius.min, b.radius.max, resolution.radius_step));
    if points > MAX_GRID_POINTS {
        return Err(PlannerError::GridTooLarge {
            points,
            limit: MAX_GRID_POINTS,
        });
    }

    let thetas = axis(b.theta.min, b.theta.max, resolution.angle_step);
    let psis = axis(b.psi.min, b.psi.max, resolution.angle_step);
    let radii = axis(b.radius.min, b.radius.max, resolution.radius_step);
    let origin = cfg.origin();

    let mut best: Option<(T, PolarCoord<T>)> = None;
    let mut count = 0;
    for &theta in &thetas {
        for &psi in &psis {
            for &radius in &radii {
                count += 1;
                let c = PolarCoord::new(theta, psi, radius);
                let Ok(breakdown) = cost(from_polar(c, origin), ctx, cfg) else {
                    continue;
                };
                if best.map_or(true, |(v, _)| breakdown.total < v) {
                    best = Some((breakdown.total, c));
                }
            }
        }
    }

    let (value, polar) = best.ok_or(PlannerError::DegenerateCandidate)?;
    Ok(GridOutcome {
        position: from_polar(polar, origin),
        polar,
        value,
        points: count,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::planner::{plan_next_position, Gates};
    use crate::scene::{Interval, PolarBounds};
    use std::f64::consts::FRAC_PI_2;

    fn ctx() -> PlanningContext<f64> {
        PlanningContext {
            current: Vec3::new(0.0, 0.45, 0.6),
            subject: Vec3::new(0.05, 0.9, 0.3),
            desired_distance: 0.4,
            pitch_target: FRAC_PI_2,
            heading_target: Some(Vec3::unit_y()),
            gates: Gates {
                distance: true,
                pitch: false,
                orientation: true,
            },
        }
    }

    #[test]
    fn grid_includes_endpoints() {
        let a = axis(0.0f64, 1.0, 0.3);
        assert_eq!(a.len(), 5);
        assert_eq!(a[0], 0.0);
        assert_eq!(*a.last().unwrap(), 1.0);
        assert!(a.windows(2).all(|w| w[1] - w[0] <= 0.3));
        assert_eq!(axis(0.5f64, 0.5, 0.1), vec![0.5]);
    }

    #[test]
    fn single_point_box() {
        let mut cfg = PlannerConfig::<f64>::default();
        cfg.bounds = PolarBounds {
            theta: Interval::new(0.2, 0.2),
            psi: Interval::new(-0.1, -0.1),
            radius: Interval::new(0.5, 0.5),
        };
        let out = grid_oracle(&ctx(), &cfg, &GridResolution::default()).unwrap();
        assert_eq!(out.points, 1);
        assert_eq!(out.polar, PolarCoord::new(0.2, -0.1, 0.5));
    }

    #[test]
    fn too_fine_grid_is_rejected() {
        let cfg = PlannerConfig::<f64>::default();
        let res = GridResolution {
            radius_step: 1e-4,
            angle_step: 1e-3,
        };
        assert!(matches!(
            grid_oracle(&ctx(), &cfg, &res),
            Err(PlannerError::GridTooLarge { .. })
        ));
    }

    #[test]
    fn oracle_never_beats_solver_by_more_than_tolerance() {
        let cfg = PlannerConfig::<f64>::default();
        let k = ctx();
        let grid = grid_oracle(&k, &cfg, &GridResolution::default()).unwrap();
        let plan = plan_next_position(&k, &cfg);
        let solver = plan.cost.unwrap().total;
        assert!(solver <= grid.value + (0.02 * grid.value).max(1e-4));
    }

    #[test]
    fn ties_resolve_lexicographically() {
        // Zero weights: every point costs 0, so the first grid point wins.
        let mut cfg = PlannerConfig::<f64>::default();
        cfg.weights = crate::planner::CostWeights {
            smoothness: 0.0,
            distance: 0.0,
            pitch: 0.0,
            orientation: 0.0,
        };
        let out = grid_oracle(&ctx(), &cfg, &GridResolution { radius_step: 0.1, angle_step: 0.2 }).unwrap();
        let b = cfg.bounds;
        assert_eq!(out.polar, PolarCoord::new(b.theta.min, b.psi.min, b.radius.min));
    }
}
