//! Next-camera-position selection by constrained cost minimization in the
//! rig's polar workspace, plus orbit waypoint generation.
//!
//! The cost is a weighted sum of four terms (smoothness, desired distance,
//! pitch, ground-plane heading), three of which are switched on or off by the
//! current shot context. The minimization runs over `(theta, psi, R)` with
//! hard box bounds; see [`plan_next_position`].

mod cost;
mod oracle;
mod orbit;
pub mod solver;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::num::Real;
use crate::scene::{
    from_polar, polar_jacobian, polar_origin, to_polar, CameraIntrinsics, PolarBounds,
    PolarCoord, SceneError, Vec3,
};

pub use cost::{cost, cost_and_gradient, literal_pitch_target, CostBreakdown};
pub use oracle::{grid_oracle, GridOutcome, GridResolution, MAX_GRID_POINTS};
pub use orbit::{orbit_waypoints, OrbitConfig, OrbitPath, OrbitPitchConvention};
use solver::{minimize_box, SolveStatus, SolverOptions};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlannerError {
    #[error("candidate position coincides with the subject")]
    DegenerateCandidate,
    #[error("grid of {points} points exceeds the limit of {limit}")]
    GridTooLarge { points: u128, limit: u128 },
    #[error("orbit arc lies entirely outside the workspace")]
    UnreachableOrbit,
    #[error("invalid planner configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Scene(#[from] SceneError),
}

/// Weights of the four cost terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostWeights<T> {
    #[serde(rename = "w_sm")]
    pub smoothness: T,
    #[serde(rename = "w_dd")]
    pub distance: T,
    #[serde(rename = "w_p")]
    pub pitch: T,
    #[serde(rename = "w_o")]
    pub orientation: T,
}

impl<T: Real> Default for CostWeights<T> {
    fn default() -> Self {
        Self {
            smoothness: T::lit(1.0),
            distance: T::lit(0.2),
            pitch: T::lit(1.0),
            orientation: T::lit(0.5),
        }
    }
}

/// Multi-start settings. Every run starts from the current position; extra
/// starts come from the geometric ideal and the best cells of a coarse lattice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, bound(serialize = "T: Serialize", deserialize = "T: Real + Deserialize<'de>"))]
pub struct SearchOptions<T> {
    /// Lattice cells along (theta, psi, R).
    pub lattice: [usize; 3],
    /// How many of the best lattice cells seed a local solve.
    pub lattice_starts: usize,
    pub solver: SolverOptions<T>,
}

impl<T: Real> Default for SearchOptions<T> {
    fn default() -> Self {
        Self {
            lattice: [5, 8, 3],
            lattice_starts: 3,
            solver: SolverOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, bound(serialize = "T: Serialize", deserialize = "T: Real + Deserialize<'de>"))]
pub struct PlannerConfig<T> {
    pub weights: CostWeights<T>,
    pub bounds: PolarBounds<T>,
    /// Planner rate in Hz.
    pub tick_hz: T,
    pub intrinsics: CameraIntrinsics<T>,
    /// World position of the rig base; the polar origin sits above it.
    pub rig_base: Vec3<T>,
    pub orbit: OrbitConfig<T>,
    pub search: SearchOptions<T>,
}

impl<T: Real> Default for PlannerConfig<T> {
    fn default() -> Self {
        Self {
            weights: CostWeights::default(),
            bounds: PolarBounds::default(),
            tick_hz: T::lit(5.0),
            intrinsics: CameraIntrinsics::default(),
            rig_base: Vec3::zero(),
            orbit: OrbitConfig::default(),
            search: SearchOptions::default(),
        }
    }
}

impl<T: Real> PlannerConfig<T> {
    pub fn origin(&self) -> Vec3<T> {
        polar_origin(self.rig_base)
    }

    pub fn validate(&self) -> Result<(), PlannerError> {
        let w = &self.weights;
        if [w.smoothness, w.distance, w.pitch, w.orientation]
            .iter()
            .any(|x| !(*x >= T::zero()) || !x.is_finite())
        {
            return Err(PlannerError::InvalidConfig("weights must be finite and >= 0".into()));
        }
        if !self.bounds.is_valid() {
            return Err(PlannerError::InvalidConfig("polar bounds are empty".into()));
        }
        if !(self.tick_hz > T::zero()) {
            return Err(PlannerError::InvalidConfig("tick_hz must be positive".into()));
        }
        Ok(())
    }
}

/// Which optional cost terms are active.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Gates {
    #[serde(rename = "q_dd")]
    pub distance: bool,
    #[serde(rename = "q_p")]
    pub pitch: bool,
    #[serde(rename = "q_o")]
    pub orientation: bool,
}

impl Gates {
    pub const fn all() -> Self {
        Self {
            distance: true,
            pitch: true,
            orientation: true,
        }
    }

    pub const fn none() -> Self {
        Self {
            distance: false,
            pitch: false,
            orientation: false,
        }
    }
}

/// Everything the cost function reads for one planning step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanningContext<T> {
    /// Current camera position.
    pub current: Vec3<T>,
    pub subject: Vec3<T>,
    pub desired_distance: T,
    /// Desired angle between the view and gravity: pi/2 is level, 0 straight down.
    pub pitch_target: T,
    /// Desired ground-plane view direction (unit, z = 0).
    pub heading_target: Option<Vec3<T>>,
    pub gates: Gates,
}

/// Why the planner held position instead of optimizing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "status", content = "reason")]
pub enum PlanStatus {
    Optimized,
    Held(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanOutcome<T> {
    pub position: Vec3<T>,
    pub polar: PolarCoord<T>,
    pub cost: Option<CostBreakdown<T>>,
    pub iterations: usize,
    pub evaluations: usize,
    pub status: PlanStatus,
}

/// Objective over polar variables with its gradient, `None` where undefined.
pub(crate) fn polar_objective<'a, T: Real>(
    ctx: &'a PlanningContext<T>,
    cfg: &'a PlannerConfig<T>,
) -> impl FnMut(&[T; 3]) -> Option<(T, [T; 3])> + 'a {
    let origin = cfg.origin();
    move |y: &[T; 3]| {
        let c = PolarCoord::from_array(*y);
        let x = from_polar(c, origin);
        let (value, grad) = cost_and_gradient(x, ctx, cfg).ok()?;
        let jac = polar_jacobian(c);
        Some((value, [jac[0].dot(grad), jac[1].dot(grad), jac[2].dot(grad)]))
    }
}

/// Selects the next camera position.
///
/// Minimizes the gated cost over the polar box with a projected quasi-Newton
/// solver. The first run is seeded at the (clamped) current position so the
/// result never costs more than staying put; additional runs start from the
/// geometric ideal placement and the best cells of a coarse lattice, and the
/// lowest-cost result wins. If no run produces a finite cost, the planner
/// holds the clamped current position and reports why.
pub fn plan_next_position<T: Real>(
    ctx: &PlanningContext<T>,
    cfg: &PlannerConfig<T>,
) -> PlanOutcome<T> {
    let origin = cfg.origin();
    let bounds = &cfg.bounds;
    let held_at = bounds.clamp_position(ctx.current, origin);
    let hold = |reason: String| PlanOutcome {
        position: held_at,
        polar: to_polar(held_at, origin).unwrap_or_else(|_| bounds.clamp(PolarCoord::new(T::zero(), T::zero(), T::zero()))),
        cost: cost(held_at, ctx, cfg).ok(),
        iterations: 0,
        evaluations: 0,
        status: PlanStatus::Held(reason),
    };
    if let Err(e) = cfg.validate() {
        return hold(e.to_string());
    }

    let mut seeds: Vec<[T; 3]> = Vec::new();
    if let Ok(c) = to_polar(held_at, origin) {
        seeds.push(bounds.clamp(c).as_array());
    }
    if let Some(ideal) = ideal_position(ctx) {
        if let Ok(c) = to_polar(ideal, origin) {
            seeds.push(bounds.clamp(c).as_array());
        }
    }
    seeds.extend(best_lattice_cells(ctx, cfg));

    let mut objective = polar_objective(ctx, cfg);
    let mut best: Option<(T, [T; 3])> = None;
    let mut iterations = 0;
    let mut evaluations = 0;
    for seed in seeds {
        let report = minimize_box(
            &mut objective,
            seed,
            bounds.lower(),
            bounds.upper(),
            &cfg.search.solver,
        );
        iterations += report.iterations;
        evaluations += report.evaluations;
        if report.status == SolveStatus::NonFinite {
            continue;
        }
        if best.map_or(true, |(v, _)| report.value < v) {
            best = Some((report.value, report.x));
        }
    }

    match best {
        Some((_, y)) => {
            let polar = PolarCoord::from_array(y);
            let position = from_polar(polar, origin);
            PlanOutcome {
                position,
                polar,
                cost: cost(position, ctx, cfg).ok(),
                iterations,
                evaluations,
                status: PlanStatus::Optimized,
            }
        }
        None => hold("solver failure: cost undefined at every start".into()),
    }
}

/// Placement that zeroes the gated distance, pitch and heading terms when the
/// workspace allows it.
fn ideal_position<T: Real>(ctx: &PlanningContext<T>) -> Option<Vec3<T>> {
    let current_view = (ctx.subject - ctx.current).normalized()?;
    let horizontal = ctx
        .heading_target
        .filter(|_| ctx.gates.orientation)
        .or_else(|| current_view.horizontal().normalized())
        .unwrap_or_else(Vec3::unit_y);
    let view = if ctx.gates.pitch {
        let (s, c) = ctx.pitch_target.sin_cos();
        horizontal * s + Vec3::gravity() * c
    } else {
        let vertical = current_view.z;
        let level = (T::one() - vertical * vertical).max(T::zero()).sqrt();
        horizontal * level + Vec3::unit_z() * vertical
    };
    let distance = if ctx.gates.distance {
        ctx.desired_distance
    } else {
        (ctx.subject - ctx.current).norm()
    };
    Some(ctx.subject - view * distance)
}

fn best_lattice_cells<T: Real>(ctx: &PlanningContext<T>, cfg: &PlannerConfig<T>) -> Vec<[T; 3]> {
    let [nt, np, nr] = cfg.search.lattice;
    let keep = cfg.search.lattice_starts;
    if keep == 0 || nt * np * nr == 0 {
        return Vec::new();
    }
    let lo = cfg.bounds.lower();
    let hi = cfg.bounds.upper();
    let cell = |i: usize, n: usize, k: usize| {
        lo[k] + (hi[k] - lo[k]) * (T::lit(i as f64) + T::lit(0.5)) / T::lit(n as f64)
    };
    let origin = cfg.origin();
    let mut scored: Vec<(T, [T; 3])> = Vec::with_capacity(nt * np * nr);
    for i in 0..nt {
        for j in 0..np {
            for k in 0..nr {
                let y = [cell(i, nt, 0), cell(j, np, 1), cell(k, nr, 2)];
                let x = from_polar(PolarCoord::from_array(y), origin);
                if let Ok(c) = cost(x, ctx, cfg) {
                    scored.push((c.total, y));
                }
            }
        }
    }
    // Stable sort keeps lattice order on ties.
    scored.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
    scored.into_iter().take(keep).map(|(_, y)| y).collect()
}
