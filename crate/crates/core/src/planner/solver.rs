//! Box-constrained quasi-Newton minimizer.
//!
//! Projected BFGS: the search direction comes from a dense inverse-Hessian
//! approximation restricted to the variables that are not held at a bound,
//! and the Armijo backtracking line search runs along the projected path
//! `clamp(x + a d)`. Small dense problems only (the planner has three
//! variables).

use serde::{Deserialize, Serialize};

use crate::num::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, bound(serialize = "T: Serialize", deserialize = "T: Real + Deserialize<'de>"))]
pub struct SolverOptions<T> {
    pub max_iterations: usize,
    /// Stop when the projected gradient's largest component falls below this.
    pub gradient_tolerance: T,
    /// Stop when an accepted step changes the objective by less than this
    /// (relative to `max(1, |f|)`).
    pub value_tolerance: T,
    /// Length of the first trial step, in variable units.
    pub initial_step: T,
}

impl<T: Real> Default for SolverOptions<T> {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            gradient_tolerance: T::epsilon().sqrt() * T::lit(1e-2),
            value_tolerance: T::epsilon() * T::lit(4.0),
            initial_step: T::lit(0.1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    /// Projected gradient or objective change below tolerance.
    Converged,
    /// No descent step could be found along the projected steepest descent.
    Stalled,
    MaxIterations,
    /// The objective was not finite at the start point.
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveReport<T, const N: usize> {
    pub x: [T; N],
    pub value: T,
    pub iterations: usize,
    pub evaluations: usize,
    pub status: SolveStatus,
}

/// Minimizes `f` over the box `[lower, upper]` starting from `start`.
///
/// `f` returns the objective and its gradient, or `None` where it is undefined;
/// the line search treats undefined points as infinitely bad.
pub fn minimize_box<T, F, const N: usize>(
    mut f: F,
    start: [T; N],
    lower: [T; N],
    upper: [T; N],
    opts: &SolverOptions<T>,
) -> SolveReport<T, N>
where
    T: Real,
    F: FnMut(&[T; N]) -> Option<(T, [T; N])>,
{
    let clamp = |x: [T; N]| {
        let mut out = x;
        for i in 0..N {
            out[i] = x[i].max(lower[i]).min(upper[i]);
        }
        out
    };

    let mut x = clamp(start);
    let mut evaluations = 1;
    let Some((mut fx, mut g)) = f(&x).filter(|(v, g)| v.is_finite() && g.iter().all(|c| c.is_finite())) else {
        return SolveReport {
            x,
            value: T::infinity(),
            iterations: 0,
            evaluations,
            status: SolveStatus::NonFinite,
        };
    };

    let mut h = identity::<T, N>();
    let mut h_is_identity = true;
    let mut scaled = false;
    let c1 = T::lit(1e-4);
    let mut status = SolveStatus::MaxIterations;
    let mut iterations = 0;

    while iterations < opts.max_iterations {
        iterations += 1;

        let mut free = [true; N];
        let mut pg_max = T::zero();
        for i in 0..N {
            let pinned = (x[i] <= lower[i] && g[i] > T::zero()) || (x[i] >= upper[i] && g[i] < T::zero());
            free[i] = !pinned;
            if !pinned {
                pg_max = pg_max.max(g[i].abs());
            }
        }
        if pg_max <= opts.gradient_tolerance {
            status = SolveStatus::Converged;
            break;
        }

        let mut d = [T::zero(); N];
        for i in 0..N {
            if free[i] {
                let mut acc = T::zero();
                for j in 0..N {
                    if free[j] {
                        acc = acc + h[i][j] * g[j];
                    }
                }
                d[i] = -acc;
            }
        }
        if !(dot(&g, &d) < T::zero()) {
            h = identity();
            h_is_identity = true;
            for i in 0..N {
                d[i] = if free[i] { -g[i] } else { T::zero() };
            }
        }

        let dnorm = dot(&d, &d).sqrt();
        let mut alpha = if h_is_identity && !scaled {
            (opts.initial_step / dnorm).min(T::one())
        } else {
            T::one()
        };

        let mut accepted = None;
        for _ in 0..60 {
            let mut trial = x;
            for i in 0..N {
                trial[i] = x[i] + alpha * d[i];
            }
            let trial = clamp(trial);
            let mut s = [T::zero(); N];
            for i in 0..N {
                s[i] = trial[i] - x[i];
            }
            if dot(&s, &s) == T::zero() {
                break;
            }
            evaluations += 1;
            if let Some((ft, gt)) = f(&trial) {
                if ft.is_finite() && gt.iter().all(|c| c.is_finite()) && ft <= fx + c1 * dot(&g, &s) {
                    accepted = Some((trial, s, ft, gt));
                    break;
                }
            }
            alpha = alpha * T::lit(0.5);
        }

        let Some((xn, s, fnew, gn)) = accepted else {
            if h_is_identity {
                status = SolveStatus::Stalled;
                break;
            }
            h = identity();
            h_is_identity = true;
            scaled = false;
            continue;
        };

        let mut y = [T::zero(); N];
        for i in 0..N {
            y[i] = gn[i] - g[i];
        }
        let sy = dot(&s, &y);
        let yy = dot(&y, &y);
        if sy > T::epsilon() * dot(&s, &s).sqrt() * yy.sqrt() && yy > T::zero() {
            if h_is_identity && !scaled {
                let gamma = sy / yy;
                for (i, row) in h.iter_mut().enumerate() {
                    for (j, hij) in row.iter_mut().enumerate() {
                        *hij = if i == j { gamma } else { T::zero() };
                    }
                }
                scaled = true;
            }
            bfgs_update(&mut h, &s, &y, sy);
            h_is_identity = false;
        }

        let change = (fx - fnew).abs();
        x = xn;
        fx = fnew;
        g = gn;
        if change <= opts.value_tolerance * fx.abs().max(T::one()) {
            status = SolveStatus::Converged;
            break;
        }
    }

    SolveReport {
        x,
        value: fx,
        iterations,
        evaluations,
        status,
    }
}

fn identity<T: Real, const N: usize>() -> [[T; N]; N] {
    let mut m = [[T::zero(); N]; N];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = T::one();
    }
    m
}

fn dot<T: Real, const N: usize>(a: &[T; N], b: &[T; N]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (x, y)| acc + *x * *y)
}

/// H <- (I - rho s y^T) H (I - rho y s^T) + rho s s^T
fn bfgs_update<T: Real, const N: usize>(h: &mut [[T; N]; N], s: &[T; N], y: &[T; N], sy: T) {
    let rho = T::one() / sy;
    let mut hy = [T::zero(); N];
    for i in 0..N {
        hy[i] = dot(&h[i], y);
    }
    let yhy = dot(y, &hy);
    let factor = (T::one() + rho * yhy) * rho;
    for i in 0..N {
        for j in 0..N {
            h[i][j] = h[i][j] - rho * (hy[i] * s[j] + s[i] * hy[j]) + factor * s[i] * s[j];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quadratic(center: [f64; 3], scale: [f64; 3]) -> impl FnMut(&[f64; 3]) -> Option<(f64, [f64; 3])> {
        move |x| {
            let mut v = 0.0;
            let mut g = [0.0; 3];
            for i in 0..3 {
                let d = x[i] - center[i];
                v += scale[i] * d * d;
                g[i] = 2.0 * scale[i] * d;
            }
            Some((v, g))
        }
    }

    #[test]
    fn unconstrained_quadratic_converges() {
        let r = minimize_box(
            quadratic([0.3, -0.2, 0.5], [1.0, 10.0, 0.1]),
            [0.0; 3],
            [-1.0; 3],
            [1.0; 3],
            &SolverOptions::default(),
        );
        assert_eq!(r.status, SolveStatus::Converged);
        assert!((r.x[0] - 0.3).abs() < 1e-7);
        assert!((r.x[1] + 0.2).abs() < 1e-7);
        assert!((r.x[2] - 0.5).abs() < 1e-6);
    }

    #[test]
    fn active_bounds_are_respected() {
        let r = minimize_box(
            quadratic([2.0, -3.0, 0.1], [1.0, 1.0, 1.0]),
            [0.0; 3],
            [-1.0; 3],
            [1.0; 3],
            &SolverOptions::default(),
        );
        assert_eq!(r.x[0], 1.0);
        assert_eq!(r.x[1], -1.0);
        assert!((r.x[2] - 0.1).abs() < 1e-7);
    }

    #[test]
    fn rosenbrock_in_a_box() {
        let f = |x: &[f64; 2]| {
            let (a, b) = (x[0], x[1]);
            let v = (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2);
            let g = [
                -2.0 * (1.0 - a) - 400.0 * a * (b - a * a),
                200.0 * (b - a * a),
            ];
            Some((v, g))
        };
        let opts = SolverOptions {
            max_iterations: 500,
            ..SolverOptions::default()
        };
        let r = minimize_box(f, [-1.2, 1.0], [-2.0, -2.0], [2.0, 2.0], &opts);
        assert!((r.x[0] - 1.0).abs() < 1e-5 && (r.x[1] - 1.0).abs() < 1e-5, "{:?}", r);
        // Box that excludes the optimum: minimizer sits on the boundary a = 0.5.
        let r = minimize_box(f, [-1.2, 1.0], [-2.0, -2.0], [0.5, 2.0], &opts);
        assert!((r.x[0] - 0.5).abs() < 1e-9);
        assert!((r.x[1] - 0.25).abs() < 1e-5);
    }

    #[test]
    fn never_worse_than_start() {
        let f = |x: &[f64; 1]| Some(((x[0] * 3.0).sin() + 0.1 * x[0], [3.0 * (x[0] * 3.0).cos() + 0.1]));
        for s in [-2.0, -0.5, 0.0, 0.7, 1.9] {
            let r = minimize_box(f, [s], [-2.0], [2.0], &SolverOptions::default());
            let f0 = (s * 3.0).sin() + 0.1 * s;
            assert!(r.value <= f0);
        }
    }

    #[test]
    fn non_finite_start() {
        let f = |_: &[f64; 2]| None;
        let r = minimize_box(f, [0.0, 0.0], [-1.0; 2], [1.0; 2], &SolverOptions::default());
        assert_eq!(r.status, SolveStatus::NonFinite);
    }

    #[test]
    fn works_in_f32() {
        let f = |x: &[f32; 2]| {
            let d0 = x[0] - 0.25;
            let d1 = x[1] + 0.5;
            Some((d0 * d0 + 4.0 * d1 * d1, [2.0 * d0, 8.0 * d1]))
        };
        let r = minimize_box(f, [0.0f32, 0.0], [-1.0; 2], [1.0; 2], &SolverOptions::default());
        assert!((r.x[0] - 0.25).abs() < 1e-3 && (r.x[1] + 0.5).abs() < 1e-3);
    }
}
