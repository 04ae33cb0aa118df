//! Method of multipliers on the proximal augmented Lagrangian, for
//! minimizing a bundle objective plus a nonsmooth regularizer.

use alloc::format;
use alloc::vec::Vec;

use super::{
    optimal_subgradient_descent, BundleObjective, Regularizer, SmoothObjective, SolveReport,
    SolverError, SolverOptions, Stopwatch, Termination, ZeroSmooth,
};
use crate::Vector;

#[cfg(not(feature = "std"))]
#[allow(unused_imports)]
use nalgebra::{ComplexField as _, RealField as _};

const LAMBDA_CAP: f64 = 1e8;

/// Moreau envelope of a regularizer evaluated at `u + mu * lambda`, which
/// replaces the nonsmooth term with a continuously differentiable one
/// inside the inner minimization.
struct MoreauTerm<'a> {
    reg: &'a Regularizer,
    mu: f64,
    lambda: Vector,
}

impl MoreauTerm<'_> {
    fn prox_point(&self, u: &Vector) -> Result<Vector, SolverError> {
        self.reg.prox(&(u + &self.lambda * self.mu), self.mu)
    }
}

impl SmoothObjective for MoreauTerm<'_> {
    fn value(&self, u: &Vector) -> Result<f64, SolverError> {
        let p = self.prox_point(u)?;
        let diff = u - &p;
        Ok(self.reg.value(&p) + self.lambda.dot(&diff) + diff.norm_squared() / (2.0 * self.mu))
    }

    fn gradient(&self, u: &Vector) -> Result<Vector, SolverError> {
        let p = self.prox_point(u)?;
        Ok(&self.lambda + (u - &p) / self.mu)
    }
}

/// Minimizes `J(u) + g(u)` for a bundle objective `J` and a prox-friendly
/// regularizer `g` by the method of multipliers.
///
/// Each outer iteration minimizes the proximal augmented Lagrangian (the
/// objective plus the Moreau envelope of `g` shifted by the multipliers)
/// with [`optimal_subgradient_descent`], then ascends the multipliers:
/// `lambda <- lambda + (u - prox_{mu g}(u + mu lambda)) / mu`. The penalty
/// `mu` halves whenever the primal residual fails to shrink by a factor of
/// four. Terminates as `Stationary` when the primal residual reaches
/// `opts.tol`, as `Diverged` when the multipliers exceed `1e8` in norm,
/// and reduces to plain optimal subgradient descent when `g` is zero.
/// The objective trace records the augmented value after each outer step.
pub fn mm_solver(
    objective: &dyn BundleObjective,
    reg: &Regularizer,
    u0: &Vector,
    lambda0: &Vector,
    mu0: f64,
    opts: &SolverOptions,
) -> Result<SolveReport, SolverError> {
    let watch = Stopwatch::start();
    opts.validate()?;
    reg.validate(u0.len())?;
    if lambda0.len() != u0.len() {
        return Err(SolverError::BadParameters(format!(
            "multiplier vector has length {}, expected {}",
            lambda0.len(),
            u0.len()
        )));
    }
    if !(mu0 > 0.0) || !mu0.is_finite() {
        return Err(SolverError::BadParameters(format!(
            "penalty parameter must be positive and finite, got {mu0}"
        )));
    }

    if matches!(reg, Regularizer::Zero) {
        let mut report = optimal_subgradient_descent(objective, &ZeroSmooth, u0, opts)?;
        report.wall_time_secs = watch.seconds();
        return Ok(report);
    }

    let mut u = u0.clone();
    let mut lambda = lambda0.clone();
    let mut mu = mu0;
    let mut trace: Vec<f64> = Vec::new();
    let mut termination = Termination::MaxIter;
    let mut primal = f64::INFINITY;
    let mut prev_primal = f64::INFINITY;
    let mut iterations = 0;

    for k in 0..opts.max_iter {
        let moreau = MoreauTerm {
            reg,
            mu,
            lambda: lambda.clone(),
        };
        let inner = optimal_subgradient_descent(objective, &moreau, &u, opts)?;
        if inner.termination == Termination::Infeasible {
            return Ok(SolveReport {
                u: inner.u,
                objective_trace: inner.objective_trace,
                stationarity_residual: f64::INFINITY,
                iterations: 0,
                termination: Termination::Infeasible,
                wall_time_secs: watch.seconds(),
            });
        }
        trace.push(inner.objective());
        u = inner.u;

        let p = reg.prox(&(&u + &lambda * mu), mu)?;
        let gap = &u - &p;
        primal = gap.norm();
        lambda += gap / mu;
        iterations = k + 1;

        if lambda.norm() > LAMBDA_CAP {
            termination = Termination::Diverged;
            break;
        }
        if primal <= opts.tol {
            termination = Termination::Stationary;
            break;
        }
        if primal > prev_primal / 4.0 {
            mu = (mu * 0.5).max(1e-12);
        }
        prev_primal = primal;
    }

    Ok(SolveReport {
        u,
        objective_trace: trace,
        stationarity_residual: primal,
        iterations,
        termination,
        wall_time_secs: watch.seconds(),
    })
}
