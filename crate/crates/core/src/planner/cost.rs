//! Camera placement cost and its analytic gradient.

use serde::{Deserialize, Serialize};

use super::{PlannerConfig, PlannerError, PlanningContext};
use crate::num::Real;
use crate::scene::Vec3;

/// Raw (ungated) cost terms plus the weighted, gated total.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown<T> {
    #[serde(rename = "c_sm")]
    pub smoothness: T,
    #[serde(rename = "c_dd")]
    pub distance: T,
    #[serde(rename = "c_p")]
    pub pitch: T,
    #[serde(rename = "c_o")]
    pub orientation: T,
    #[serde(rename = "J")]
    pub total: T,
}

/// Cost terms together with their gradients with respect to the candidate.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Terms<T> {
    pub values: CostBreakdown<T>,
    pub gradient: Vec3<T>,
}

/// Evaluates every term at `candidate`.
pub fn cost<T: Real>(
    candidate: Vec3<T>,
    ctx: &PlanningContext<T>,
    cfg: &PlannerConfig<T>,
) -> Result<CostBreakdown<T>, PlannerError> {
    terms(candidate, ctx, cfg, false).map(|t| t.values)
}

/// Total cost and its gradient with respect to the Cartesian candidate.
pub fn cost_and_gradient<T: Real>(
    candidate: Vec3<T>,
    ctx: &PlanningContext<T>,
    cfg: &PlannerConfig<T>,
) -> Result<(T, Vec3<T>), PlannerError> {
    terms(candidate, ctx, cfg, true).map(|t| (t.values.total, t.gradient))
}

pub(crate) fn terms<T: Real>(
    x: Vec3<T>,
    ctx: &PlanningContext<T>,
    cfg: &PlannerConfig<T>,
    with_gradient: bool,
) -> Result<Terms<T>, PlannerError> {
    let two = T::lit(2.0);
    let w = &cfg.weights;

    let step = x - ctx.current;
    let c_sm = step.norm_squared();
    let mut grad = step * (two * w.smoothness);

    let to_subject = ctx.subject - x;
    let dist = to_subject.norm();
    if !(dist > T::tiny()) {
        return Err(PlannerError::DegenerateCandidate);
    }
    let view = to_subject / dist;

    let gap = dist - ctx.desired_distance;
    let c_dd = gap * gap;
    if ctx.gates.distance && with_gradient {
        // d/dx |x - s| = -view
        grad -= view * (two * gap * w.distance);
    }

    // d(view)/dx = -(I - view view^T) / dist, applied to a vector `a` gives
    // -(a - view (view . a)) / dist (the Jacobian is symmetric).
    let view_jt = |a: Vec3<T>| -(a - view * view.dot(a)) / dist;

    let gravity = Vec3::gravity();
    let pitch_err = view.dot(gravity) - ctx.pitch_target.cos();
    let c_p = pitch_err * pitch_err;
    if ctx.gates.pitch && with_gradient {
        grad += view_jt(gravity) * (two * pitch_err * w.pitch);
    }

    let (c_o, grad_o) = orientation_term(view, ctx.heading_target, with_gradient);
    if ctx.gates.orientation && with_gradient {
        if let Some(g_view) = grad_o {
            grad += view_jt(g_view) * w.orientation;
        }
    }

    let total = w.smoothness * c_sm
        + gate::<T>(ctx.gates.distance) * w.distance * c_dd
        + gate::<T>(ctx.gates.pitch) * w.pitch * c_p
        + gate::<T>(ctx.gates.orientation) * w.orientation * c_o;

    Ok(Terms {
        values: CostBreakdown {
            smoothness: c_sm,
            distance: c_dd,
            pitch: c_p,
            orientation: c_o,
            total,
        },
        gradient: grad,
    })
}

fn gate<T: Real>(on: bool) -> T {
    if on {
        T::one()
    } else {
        T::zero()
    }
}

/// Heading cost `|w - v_o|^2` where `w` is the normalized ground-plane
/// projection of the view direction. Returns the value and its gradient with
/// respect to the (unit) view vector.
///
/// Without a heading target the term is zero. A vertical view has no ground
/// heading; the term then takes its azimuth-averaged value 2 with no gradient.
fn orientation_term<T: Real>(
    view: Vec3<T>,
    heading: Option<Vec3<T>>,
    with_gradient: bool,
) -> (T, Option<Vec3<T>>) {
    let Some(target) = heading else {
        return (T::zero(), None);
    };
    let two = T::lit(2.0);
    let h = view.horizontal();
    let n = h.norm();
    if n <= T::tiny() {
        return (two, None);
    }
    let wdir = h / n;
    let diff = wdir - target;
    let value = diff.norm_squared();
    if !with_gradient {
        return (value, None);
    }
    // d|w - t|^2 / dh = 2 (I - w w^T)(w - t) / n ; projection P is identity on x, y.
    let g = (diff - wdir * wdir.dot(diff)) * (two / n);
    (value, Some(g.horizontal()))
}

/// Target value of the view-gravity dot product as printed in the source
/// formulation, `acos(pi/2 - beta)`. Kept for reference: it is undefined for
/// `beta < pi/2 - 1` (including the straight-down target `beta = 0`) and
/// exceeds 1 for `beta = pi/2`, so the planner uses `cos(beta)` instead.
pub fn literal_pitch_target<T: Real>(beta: T) -> T {
    (T::FRAC_PI_2() - beta).acos()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::planner::Gates;
    use std::f64::consts::FRAC_PI_2;

    fn v(x: f64, y: f64, z: f64) -> Vec3<f64> {
        Vec3::new(x, y, z)
    }

    fn ctx() -> PlanningContext<f64> {
        PlanningContext {
            current: v(0.0, 0.3, 0.5),
            subject: v(0.0, 0.8, 0.5),
            desired_distance: 0.5,
            pitch_target: FRAC_PI_2,
            heading_target: Some(v(0.0, 1.0, 0.0)),
            gates: Gates::all(),
        }
    }

    #[test]
    fn optimum_configuration_costs_nothing() {
        let cfg = PlannerConfig::default();
        let c = cost(v(0.0, 0.3, 0.5), &ctx(), &cfg).unwrap();
        assert!(c.smoothness.abs() < 1e-15);
        assert!(c.distance.abs() < 1e-15);
        assert!(c.pitch.abs() < 1e-15);
        assert!(c.orientation.abs() < 1e-15);
        assert!(c.total.abs() < 1e-15);
    }

    #[test]
    fn displacement_only() {
        let cfg = PlannerConfig::default();
        let mut k = ctx();
        k.gates = Gates::none();
        let c = cost(v(0.1, 0.3, 0.5), &k, &cfg).unwrap();
        assert!((c.total - 0.01).abs() < 1e-12);
        assert!((c.smoothness - 0.01).abs() < 1e-12);
    }

    #[test]
    fn distance_term_is_gated_off_for_high_angle() {
        let cfg = PlannerConfig::default();
        let mut k = ctx();
        k.gates = Gates {
            distance: false,
            pitch: false,
            orientation: false,
        };
        let c = cost(v(0.0, 0.3, 0.5) + v(0.0, 0.0, 0.0), &k, &cfg).unwrap();
        k.desired_distance = 0.2;
        let c2 = cost(v(0.0, 0.3, 0.5), &k, &cfg).unwrap();
        assert!(c2.distance > 0.08);
        assert_eq!(c.total, c2.total);
    }

    #[test]
    fn total_is_exact_weighted_gated_sum() {
        let cfg = PlannerConfig::default();
        let mut k = ctx();
        k.desired_distance = 0.3;
        k.pitch_target = 0.2;
        k.heading_target = Some(v(1.0, 0.0, 0.0));
        for (d, p, o) in [(true, false, true), (false, true, false), (true, true, true)] {
            k.gates = Gates {
                distance: d,
                pitch: p,
                orientation: o,
            };
            let c = cost(v(0.1, 0.2, 0.6), &k, &cfg).unwrap();
            let w = cfg.weights;
            let expect = w.smoothness * c.smoothness
                + if d { w.distance * c.distance } else { 0.0 }
                + if p { w.pitch * c.pitch } else { 0.0 }
                + if o { w.orientation * c.orientation } else { 0.0 };
            assert_eq!(c.total, expect);
            assert!(c.smoothness >= 0.0 && c.distance >= 0.0 && c.pitch >= 0.0 && c.orientation >= 0.0);
        }
    }

    #[test]
    fn candidate_on_subject_is_degenerate() {
        let cfg = PlannerConfig::default();
        let k = ctx();
        assert!(matches!(
            cost(k.subject, &k, &cfg),
            Err(PlannerError::DegenerateCandidate)
        ));
    }

    #[test]
    fn straight_down_view_satisfies_zero_pitch_target() {
        let cfg = PlannerConfig::default();
        let mut k = ctx();
        k.pitch_target = 0.0;
        let c = cost(k.subject + v(0.0, 0.0, 0.4), &k, &cfg).unwrap();
        assert!(c.pitch.abs() < 1e-15);
    }

    #[test]
    fn literal_pitch_formula_is_rejected() {
        assert!(literal_pitch_target(0.0f64).is_nan());
        assert!(literal_pitch_target(FRAC_PI_2) > 1.0);
        // The implemented target spans the reachable range of a dot product.
        assert!((0.0f64.cos() - 1.0).abs() < 1e-15);
        assert!(FRAC_PI_2.cos().abs() < 1e-15);
    }

    #[test]
    fn orientation_ignores_pitch() {
        let cfg = PlannerConfig::default();
        let k = ctx();
        // Same ground heading, steeper view: no heading penalty.
        let c = cost(v(0.0, 0.6, 0.9), &k, &cfg).unwrap();
        assert!(c.orientation < 1e-15);
        // Opposite heading: maximal penalty 4.
        let c = cost(v(0.0, 1.1, 0.5), &k, &cfg).unwrap();
        assert!((c.orientation - 4.0).abs() < 1e-12);
    }
}
