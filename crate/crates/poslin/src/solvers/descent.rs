//! First-order methods: proximal gradient with Barzilai-Borwein warm
//! starts, the plain subgradient method, and descent along the optimal
//! subgradient direction.

use alloc::vec;
use alloc::vec::Vec;

use super::{
    BundleObjective, Regularizer, SmoothObjective, SolveReport, SolverError, SolverOptions,
    StepSchedule, Stopwatch, Termination,
};
use crate::metrics;
use crate::Vector;

#[cfg(not(feature = "std"))]
#[allow(unused_imports)]
use nalgebra::{ComplexField as _, RealField as _};

const STEP_MIN: f64 = 1e-12;
const STEP_MAX: f64 = 1e12;

fn infeasible_report(u: Vector, trace: Vec<f64>, watch: &Stopwatch) -> SolveReport {
    SolveReport {
        u,
        objective_trace: trace,
        stationarity_residual: f64::INFINITY,
        iterations: 0,
        termination: Termination::Infeasible,
        wall_time_secs: watch.seconds(),
    }
}

/// Minimizes `f(u) + g(u)` for smooth `f` and prox-friendly `g` by
/// proximal gradient steps `u+ = prox_{t g}(u - t grad f(u))`.
///
/// The step is warm-started with the Barzilai-Borwein ratio and halved
/// until the quadratic upper bound of the smooth part holds and the
/// composite objective does not increase, so the trace is non-increasing.
/// Terminates as `Stationary` when the prox-gradient residual
/// `|u - u+| / t` drops to `opts.tol`, as `Diverged` when the backtracking
/// budget cannot restore a finite, non-increasing objective, and as
/// `Infeasible` when the starting point has an infinite composite value.
pub fn proximal_gradient(
    f: &dyn SmoothObjective,
    reg: &Regularizer,
    u0: &Vector,
    opts: &SolverOptions,
) -> Result<SolveReport, SolverError> {
    let watch = Stopwatch::start();
    opts.validate()?;
    reg.validate(u0.len())?;

    let mut u = u0.clone();
    let mut f_val = f.value(&u)?;
    let mut total = f_val + reg.value(&u);
    let mut trace = vec![total];
    if !total.is_finite() {
        return Ok(infeasible_report(u, trace, &watch));
    }

    let mut grad = f.gradient(&u)?;
    let mut prev: Option<(Vector, Vector)> = None;
    let mut step = opts.initial_step;
    let mut residual = f64::INFINITY;
    let mut termination = Termination::MaxIter;
    let mut iterations = 0;

    for k in 0..opts.max_iter {
        if let Some((u_prev, g_prev)) = &prev {
            let s = &u - u_prev;
            let y = &grad - g_prev;
            let sy = s.dot(&y);
            if sy > 0.0 {
                step = (s.norm_squared() / sy).clamp(STEP_MIN, STEP_MAX);
            }
        }

        let mut accepted = None;
        let mut t = step;
        for _ in 0..=opts.max_halvings {
            let cand = reg.prox(&(&u - &grad * t), t)?;
            let f_cand = f.value(&cand)?;
            if f_cand.is_finite() {
                let diff = &cand - &u;
                let upper =
                    f_val + grad.dot(&diff) + diff.norm_squared() / (2.0 * t) + 1e-12 * (1.0 + f_val.abs());
                let total_cand = f_cand + reg.value(&cand);
                if f_cand <= upper && total_cand.is_finite() && total_cand <= total {
                    accepted = Some((cand, f_cand, total_cand, t));
                    break;
                }
            }
            t *= 0.5;
        }

        let Some((cand, f_cand, total_cand, t)) = accepted else {
            termination = Termination::Diverged;
            iterations = k;
            break;
        };

        residual = (&cand - &u).norm() / t;
        prev = Some((u.clone(), grad.clone()));
        u = cand;
        f_val = f_cand;
        total = total_cand;
        trace.push(total);
        step = t;
        iterations = k + 1;

        if residual <= opts.tol {
            termination = Termination::Stationary;
            break;
        }
        grad = f.gradient(&u)?;
    }

    Ok(SolveReport {
        u,
        objective_trace: trace,
        stationarity_residual: residual,
        iterations,
        termination,
        wall_time_secs: watch.seconds(),
    })
}

/// Runs `iters` iterations of `u <- u - s_k (f + grad g)` where `f` is the
/// first active-block subgradient of the bundle objective.
///
/// No descent is guaranteed and the trace is generally non-monotone; the
/// best objective seen is tracked and returned as the final iterate. When
/// a step destabilizes the loop the infinite value is recorded and the
/// iteration restarts from the best point so far.
pub fn subgradient_method(
    objective: &dyn BundleObjective,
    g: &dyn SmoothObjective,
    u0: &Vector,
    schedule: StepSchedule,
    iters: usize,
) -> Result<SolveReport, SolverError> {
    let watch = Stopwatch::start();
    let mut u = u0.clone();
    let mut best = objective.value(&u)? + g.value(&u)?;
    let mut best_u = u.clone();
    let mut trace = vec![best];
    if !best.is_finite() {
        return Ok(infeasible_report(u, trace, &watch));
    }

    for k in 1..=iters {
        let bundle = objective.bundle(&u)?;
        let sub = &bundle.blocks[0].gradient + g.gradient(&u)?;
        u -= sub * schedule.step(k);
        let val = objective.value(&u)? + g.value(&u)?;
        trace.push(val);
        if val < best {
            best = val;
            best_u = u.clone();
        }
        if !val.is_finite() {
            u = best_u.clone();
        }
    }

    let bundle = objective.bundle(&best_u)?;
    let residual = metrics::stationarity_check(&bundle, &g.gradient(&best_u)?)?;
    Ok(SolveReport {
        u: best_u,
        objective_trace: trace,
        stationarity_residual: residual,
        iterations: iters,
        termination: Termination::MaxIter,
        wall_time_secs: watch.seconds(),
    })
}

/// Minimizes `J(u) + g(u)` for a bundle objective `J` and smooth `g` by
/// line searching along the optimal subgradient direction.
///
/// The working bundle admits every block within
/// `opts.stationarity_tol * (1 + J)` of the achieved value, so near-ties
/// enter the direction program at the accuracy being asked for instead of
/// trapping the iterates in a zigzag across a nonsmooth valley.
///
/// Each iteration checks the bundle stationarity residual first and stops
/// as `Stationary` once it reaches `opts.stationarity_tol` (or once the
/// direction program certifies that no descent direction exists within the
/// active bundle). Otherwise the certified direction is line-searched with
/// an Armijo test against its predicted decrease rate, which keeps the
/// trace strictly decreasing. A line search that exhausts its budget on a
/// certified direction is an error.
pub fn optimal_subgradient_descent(
    objective: &dyn BundleObjective,
    g: &dyn SmoothObjective,
    u0: &Vector,
    opts: &SolverOptions,
) -> Result<SolveReport, SolverError> {
    let watch = Stopwatch::start();
    opts.validate()?;

    let mut u = u0.clone();
    let mut total = objective.value(&u)? + g.value(&u)?;
    let mut trace = vec![total];
    if !total.is_finite() {
        return Ok(infeasible_report(u, trace, &watch));
    }

    let mut residual = f64::INFINITY;
    let mut termination = Termination::MaxIter;
    let mut step = opts.initial_step;
    let mut iterations = 0;
    let mut prev: Option<(Vector, Vector)> = None;
    let window = opts.stationarity_tol.max(metrics::TIE_TOL);

    for k in 0..opts.max_iter {
        let bundle = objective.bundle_within(&u, window)?;
        let grad_g = g.gradient(&u)?;
        residual = metrics::stationarity_check(&bundle, &grad_g)?;
        iterations = k;
        if residual <= opts.stationarity_tol {
            termination = Termination::Stationary;
            break;
        }

        let (v, certified) = metrics::optimal_subgradient_direction(&bundle, &grad_g)?;
        if !certified {
            termination = Termination::Stationary;
            break;
        }
        let rate = bundle
            .blocks
            .iter()
            .map(|b| (&b.gradient + &grad_g).dot(&v))
            .fold(f64::NEG_INFINITY, f64::max);

        // Barzilai-Borwein warm start from the aggregated subgradients,
        // falling back to growing the last accepted step.
        let z = -&v;
        if let Some((u_prev, z_prev)) = &prev {
            let du = &u - u_prev;
            let dz = &z - z_prev;
            let dot = du.dot(&dz);
            if dot > 0.0 {
                step = (du.norm_squared() / dot).clamp(STEP_MIN, 1e6);
            }
        }
        prev = Some((u.clone(), z));

        let mut s = step;
        let mut accepted = None;
        for _ in 0..=opts.max_halvings {
            let cand = &u + &v * s;
            let val = objective.value(&cand)? + g.value(&cand)?;
            if val.is_finite() && val <= total + opts.armijo * s * rate {
                accepted = Some((cand, val, s));
                break;
            }
            s *= 0.5;
        }
        let Some((cand, val, s)) = accepted else {
            return Err(SolverError::LineSearchStall);
        };
        u = cand;
        total = val;
        trace.push(val);
        step = (s * 2.0).clamp(STEP_MIN, 1e6);
        iterations = k + 1;
    }

    if termination == Termination::MaxIter {
        let bundle = objective.bundle_within(&u, window)?;
        residual = metrics::stationarity_check(&bundle, &g.gradient(&u)?)?;
    }

    Ok(SolveReport {
        u,
        objective_trace: trace,
        stationarity_residual: residual,
        iterations,
        termination,
        wall_time_secs: watch.seconds(),
    })
}
