//! Projections, proximal operators, and first-order methods.
//!
//! The methods minimize composites of a system metric (H2 or H∞) and a
//! structure-inducing term: [`proximal_gradient`] for smooth metrics with
//! prox-friendly regularizers, [`subgradient_method`] as a baseline without
//! descent guarantees, [`optimal_subgradient_descent`] for the
//! nondifferentiable H∞ metric using the certified direction program, and
//! [`mm_solver`] for nonsmooth regularizers via the proximal augmented
//! Lagrangian.

mod descent;
mod mm;
mod projections;

pub use descent::{optimal_subgradient_descent, proximal_gradient, subgradient_method};
pub use mm::mm_solver;
pub use projections::{
    project_capped_simplex, project_simplex, project_with_subset_floors, prox_l1, ConstraintSet,
};

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::metrics::{self, MetricsError, SubgradientBundle};
use crate::possys::PositiveSystem;
use crate::{Matrix, Vector};

#[cfg(not(feature = "std"))]
#[allow(unused_imports)]
use nalgebra::{ComplexField as _, RealField as _};

/// Errors from solver configuration or inner machinery. Divergence and
/// infeasibility of a run are reported through [`Termination`] instead.
#[derive(Debug, Clone, PartialEq)]
pub enum SolverError {
    /// Invalid options, constraint parameters, or operand shapes.
    BadParameters(String),
    /// Dykstra's alternating projections did not converge.
    MaxAlternations,
    /// A certified descent direction failed to produce decrease within the
    /// backtracking budget.
    LineSearchStall,
    /// Metric evaluation failed.
    Metrics(MetricsError),
}

impl core::fmt::Display for SolverError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            SolverError::BadParameters(what) => write!(f, "bad parameters: {what}"),
            SolverError::MaxAlternations => {
                write!(f, "alternating projections exceeded the sweep budget")
            }
            SolverError::LineSearchStall => {
                write!(f, "line search stalled on a certified descent direction")
            }
            SolverError::Metrics(e) => write!(f, "{e}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for SolverError {}

impl From<MetricsError> for SolverError {
    fn from(e: MetricsError) -> Self {
        SolverError::Metrics(e)
    }
}

/// Why a solver stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// The termination criterion of the method was met.
    Stationary,
    /// The iteration budget ran out first.
    MaxIter,
    /// The run diverged (unbounded multipliers, or line search could not
    /// restore a finite objective).
    Diverged,
    /// The starting point was infeasible or not stabilizing.
    Infeasible,
}

impl Termination {
    /// Stable lowercase name used in serialized reports.
    pub fn name(&self) -> &'static str {
        match self {
            Termination::Stationary => "stationary",
            Termination::MaxIter => "max_iter",
            Termination::Diverged => "diverged",
            Termination::Infeasible => "infeasible",
        }
    }
}

/// Outcome of a solver run.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    /// Final (or best, for the plain subgradient method) iterate.
    pub u: Vector,
    /// Objective value per iteration, starting with the initial point. For
    /// [`mm_solver`] the entries are the inner augmented-Lagrangian values.
    pub objective_trace: Vec<f64>,
    /// Final first-order residual: the prox-gradient residual, the bundle
    /// stationarity residual, or the primal residual for [`mm_solver`].
    pub stationarity_residual: f64,
    /// Number of completed iterations.
    pub iterations: usize,
    pub termination: Termination,
    /// Wall-clock seconds; zero when built without `std`.
    pub wall_time_secs: f64,
}

impl SolveReport {
    /// Final objective value (last trace entry).
    pub fn objective(&self) -> f64 {
        self.objective_trace.last().copied().unwrap_or(f64::INFINITY)
    }
}

/// Step-size schedules for the plain subgradient method.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepSchedule {
    /// `s_k = s` for all iterations.
    Constant(f64),
    /// `s_k = s / k` with `k` counted from one.
    Diminishing(f64),
}

impl StepSchedule {
    fn step(&self, k: usize) -> f64 {
        match self {
            StepSchedule::Constant(s) => *s,
            StepSchedule::Diminishing(s) => *s / k as f64,
        }
    }
}

/// Tuning knobs shared by the iterative methods.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    /// Iteration budget (outer iterations for [`mm_solver`]).
    pub max_iter: usize,
    /// Residual tolerance: prox-gradient residual for
    /// [`proximal_gradient`], primal residual for [`mm_solver`].
    pub tol: f64,
    /// Bundle stationarity tolerance for [`optimal_subgradient_descent`].
    pub stationarity_tol: f64,
    /// Armijo sufficient-decrease constant.
    pub armijo: f64,
    /// Backtracking budget per line search.
    pub max_halvings: usize,
    /// First trial step length before warm starting takes over.
    pub initial_step: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            max_iter: 500,
            tol: 1e-6,
            stationarity_tol: 1e-4,
            armijo: 1e-4,
            max_halvings: 60,
            initial_step: 1.0,
        }
    }
}

impl SolverOptions {
    fn validate(&self) -> Result<(), SolverError> {
        let ok = self.tol > 0.0
            && self.stationarity_tol > 0.0
            && self.armijo > 0.0
            && self.armijo < 1.0
            && self.initial_step > 0.0
            && self.initial_step.is_finite();
        if ok {
            Ok(())
        } else {
            Err(SolverError::BadParameters(String::from(
                "tolerances, the Armijo constant, and the initial step must be positive \
                 (Armijo constant below one)",
            )))
        }
    }
}

/// A term with a value and an exact gradient wherever the value is finite.
pub trait SmoothObjective {
    fn value(&self, u: &Vector) -> Result<f64, SolverError>;
    /// Gradient at `u`; callers only invoke this where `value` is finite.
    fn gradient(&self, u: &Vector) -> Result<Vector, SolverError>;
}

/// A term with a value and a subgradient bundle wherever the value is
/// finite.
pub trait BundleObjective {
    fn value(&self, u: &Vector) -> Result<f64, SolverError>;
    /// Active-block subgradients at `u`; callers only invoke this where
    /// `value` is finite.
    fn bundle(&self, u: &Vector) -> Result<SubgradientBundle, SolverError>;
    /// Like [`bundle`](Self::bundle) but listing every block within
    /// `rel_tie * (1 + value)` of the achieved value. Descent methods widen
    /// the window to their working accuracy; the default ignores the
    /// window, which is only adequate for objectives that are smooth on
    /// their domain.
    fn bundle_within(&self, u: &Vector, rel_tie: f64) -> Result<SubgradientBundle, SolverError> {
        let _ = rel_tie;
        self.bundle(u)
    }
}

/// The squared H2 norm of a system as a smooth objective.
#[derive(Debug, Clone)]
pub struct H2Objective<'a> {
    pub sys: &'a PositiveSystem,
}

impl SmoothObjective for H2Objective<'_> {
    fn value(&self, u: &Vector) -> Result<f64, SolverError> {
        Ok(metrics::j2(self.sys, u)?)
    }

    fn gradient(&self, u: &Vector) -> Result<Vector, SolverError> {
        Ok(metrics::grad_j2(self.sys, u)?)
    }
}

/// The H∞ norm of a system. Usable as a [`BundleObjective`] everywhere and
/// as a [`SmoothObjective`] wherever a single block achieves the norm (at
/// a tie the gradient of the first achieving block is reported).
#[derive(Debug, Clone)]
pub struct HinfObjective<'a> {
    pub sys: &'a PositiveSystem,
}

impl BundleObjective for HinfObjective<'_> {
    fn value(&self, u: &Vector) -> Result<f64, SolverError> {
        Ok(metrics::jinf(self.sys, u)?)
    }

    fn bundle(&self, u: &Vector) -> Result<SubgradientBundle, SolverError> {
        Ok(metrics::jinf_blocks(self.sys, u)?)
    }

    fn bundle_within(&self, u: &Vector, rel_tie: f64) -> Result<SubgradientBundle, SolverError> {
        Ok(metrics::jinf_blocks_with_tolerance(self.sys, u, rel_tie)?)
    }
}

impl SmoothObjective for HinfObjective<'_> {
    fn value(&self, u: &Vector) -> Result<f64, SolverError> {
        Ok(metrics::jinf(self.sys, u)?)
    }

    fn gradient(&self, u: &Vector) -> Result<Vector, SolverError> {
        let bundle = metrics::jinf_blocks(self.sys, u)?;
        Ok(bundle.blocks[0].gradient.clone())
    }
}

/// The quadratic penalty `u^T R u` with symmetric positive semidefinite `R`.
#[derive(Debug, Clone)]
pub struct QuadraticTerm {
    r: Matrix,
}

impl QuadraticTerm {
    pub fn new(r: Matrix) -> Result<Self, SolverError> {
        if r.nrows() != r.ncols() {
            return Err(SolverError::BadParameters(format!(
                "quadratic weight must be square, got {}x{}",
                r.nrows(),
                r.ncols()
            )));
        }
        if !r.iter().all(|x| x.is_finite()) {
            return Err(SolverError::BadParameters(String::from(
                "quadratic weight contains non-finite entries",
            )));
        }
        Ok(QuadraticTerm { r })
    }

    /// Identity weight of the given size.
    pub fn identity(n: usize) -> Self {
        QuadraticTerm {
            r: Matrix::identity(n, n),
        }
    }

    pub fn weight(&self) -> &Matrix {
        &self.r
    }
}

impl SmoothObjective for QuadraticTerm {
    fn value(&self, u: &Vector) -> Result<f64, SolverError> {
        check_len(u, self.r.nrows())?;
        Ok((u.transpose() * &self.r * u)[(0, 0)])
    }

    fn gradient(&self, u: &Vector) -> Result<Vector, SolverError> {
        check_len(u, self.r.nrows())?;
        Ok((&self.r + self.r.transpose()) * u)
    }
}

/// The zero function, for solving unregularized problems.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroSmooth;

impl SmoothObjective for ZeroSmooth {
    fn value(&self, _u: &Vector) -> Result<f64, SolverError> {
        Ok(0.0)
    }

    fn gradient(&self, u: &Vector) -> Result<Vector, SolverError> {
        Ok(Vector::zeros(u.len()))
    }
}

/// Pointwise sum of smooth terms.
pub struct SmoothSum<'a> {
    pub terms: Vec<&'a dyn SmoothObjective>,
}

impl SmoothObjective for SmoothSum<'_> {
    fn value(&self, u: &Vector) -> Result<f64, SolverError> {
        let mut total = 0.0;
        for term in &self.terms {
            total += term.value(u)?;
            if !total.is_finite() {
                return Ok(f64::INFINITY);
            }
        }
        Ok(total)
    }

    fn gradient(&self, u: &Vector) -> Result<Vector, SolverError> {
        let mut g = Vector::zeros(u.len());
        for term in &self.terms {
            g += term.gradient(u)?;
        }
        Ok(g)
    }
}

fn check_len(u: &Vector, n: usize) -> Result<(), SolverError> {
    if u.len() == n {
        Ok(())
    } else {
        Err(SolverError::BadParameters(format!(
            "vector has length {}, expected {n}",
            u.len()
        )))
    }
}

/// Nonsmooth terms with inexpensive proximal operators.
#[derive(Debug, Clone, PartialEq)]
pub enum Regularizer {
    /// No regularization.
    Zero,
    /// `gamma * sum_i w_i |u_i|`.
    L1 { gamma: f64, weights: Vector },
    /// `gamma * sum_i w_i u_i` restricted to `u >= 0`.
    NonnegL1 { gamma: f64, weights: Vector },
    /// Indicator of a feasible set; the proximal operator is the
    /// projection.
    Constraint(ConstraintSet),
}

impl Regularizer {
    /// Checks parameters against a vector length `n`.
    pub fn validate(&self, n: usize) -> Result<(), SolverError> {
        match self {
            Regularizer::Zero => Ok(()),
            Regularizer::L1 { gamma, weights } | Regularizer::NonnegL1 { gamma, weights } => {
                if !(*gamma >= 0.0) || !gamma.is_finite() {
                    return Err(SolverError::BadParameters(format!(
                        "l1 weight must be nonnegative and finite, got {gamma}"
                    )));
                }
                if weights.len() != n {
                    return Err(SolverError::BadParameters(format!(
                        "l1 weight vector has length {}, expected {n}",
                        weights.len()
                    )));
                }
                if weights.iter().any(|&w| w < 0.0 || !w.is_finite()) {
                    return Err(SolverError::BadParameters(String::from(
                        "l1 weights must be nonnegative and finite",
                    )));
                }
                Ok(())
            }
            Regularizer::Constraint(set) => set.validate(n),
        }
    }

    /// Value of the term at `u` (`+inf` outside the domain of an
    /// indicator, with a small feasibility tolerance for roundoff).
    pub fn value(&self, u: &Vector) -> f64 {
        match self {
            Regularizer::Zero => 0.0,
            Regularizer::L1 { gamma, weights } => {
                gamma * u.iter().zip(weights.iter()).map(|(&x, &w)| w * x.abs()).sum::<f64>()
            }
            Regularizer::NonnegL1 { gamma, weights } => {
                let tol = 1e-9 * (1.0 + u.amax());
                if u.min() < -tol {
                    return f64::INFINITY;
                }
                gamma
                    * u.iter()
                        .zip(weights.iter())
                        .map(|(&x, &w)| w * x.max(0.0))
                        .sum::<f64>()
            }
            Regularizer::Constraint(set) => {
                let tol = 1e-7 * (1.0 + u.amax());
                if set.violation(u) <= tol {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    /// Proximal operator `argmin_x g(x) + |x - y|^2 / (2 t)`.
    pub fn prox(&self, y: &Vector, t: f64) -> Result<Vector, SolverError> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(SolverError::BadParameters(format!(
                "prox scale must be positive and finite, got {t}"
            )));
        }
        self.validate(y.len())?;
        match self {
            Regularizer::Zero => Ok(y.clone()),
            Regularizer::L1 { gamma, weights } => prox_l1(y, t * gamma, weights),
            Regularizer::NonnegL1 { gamma, weights } => Ok(Vector::from_iterator(
                y.len(),
                y.iter()
                    .zip(weights.iter())
                    .map(|(&v, &w)| (v - t * gamma * w).max(0.0)),
            )),
            Regularizer::Constraint(set) => set.project(y),
        }
    }
}

#[cfg(feature = "std")]
struct Stopwatch(std::time::Instant);

#[cfg(feature = "std")]
impl Stopwatch {
    fn start() -> Self {
        Stopwatch(std::time::Instant::now())
    }

    fn seconds(&self) -> f64 {
        self.0.elapsed().as_secs_f64()
    }
}

#[cfg(not(feature = "std"))]
struct Stopwatch;

#[cfg(not(feature = "std"))]
impl Stopwatch {
    fn start() -> Self {
        Stopwatch
    }

    fn seconds(&self) -> f64 {
        0.0
    }
}
