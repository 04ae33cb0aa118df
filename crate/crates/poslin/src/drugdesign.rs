//! Combination drug-dose design for positive systems.
//!
//! Doses enter the dynamics through the diagonal perturbation
//! `A + diag(D u)`, where column `k` of `D` collects the per-state kill
//! rates of drug `k` and `u_k >= 0` is its dose. Two design modes are
//! provided: minimizing a closed-loop norm over a fixed total-dose budget,
//! and a sparsity-promoting homotopy that sweeps a reweighted l1 penalty
//! until at most a prescribed number of drugs remains, then re-optimizes
//! the doses on each support it encountered along the way.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::ComplexField as _;

use crate::metrics::{self, BlockSubgradient, Metric, MetricsError, SubgradientBundle, TIE_TOL};
use crate::possys::{PositiveSystem, PossysError};
use crate::solvers::{
    mm_solver, project_simplex, proximal_gradient, BundleObjective, ConstraintSet, H2Objective,
    HinfObjective, Regularizer, SolveReport, SolverError, SolverOptions,
};
use crate::{Matrix, Vector};

/// Dose entries with magnitude above this threshold count as active.
pub const ACTIVE_TOL: f64 = 1e-8;

/// Reweighting sweeps allowed at a fixed penalty level before the
/// homotopy moves on.
pub const REWEIGHT_SWEEPS: usize = 5;

const RAY_SCALE_MIN: f64 = 1e-3;
const RAY_SCALE_MAX: f64 = 1e6;

/// Errors from the therapy-design routines.
#[derive(Debug, Clone, PartialEq)]
pub enum DrugError {
    /// Invalid problem data, penalty matrix, grid, or support.
    BadParameters(String),
    /// No stabilizing dose exists within the requested structure, as far
    /// as the documented ray and vertex scans can tell.
    Infeasible(String),
    /// The homotopy exhausted its grid with more active drugs than
    /// requested; the path collected so far is attached.
    TargetUnreachable(HomotopyPath),
    /// Norm evaluation failed.
    Metrics(MetricsError),
    /// An inner solver rejected its inputs.
    Solver(SolverError),
    /// System construction failed.
    System(PossysError),
}

impl core::fmt::Display for DrugError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            DrugError::BadParameters(what) => write!(f, "bad parameters: {what}"),
            DrugError::Infeasible(what) => write!(f, "infeasible: {what}"),
            DrugError::TargetUnreachable(path) => write!(
                f,
                "target cardinality unreachable; the recorded path has {} steps and ends at \
                 cardinality {}",
                path.steps.len(),
                path.steps.last().map(|s| s.cardinality).unwrap_or(0)
            ),
            DrugError::Metrics(e) => write!(f, "metric evaluation failed: {e}"),
            DrugError::Solver(e) => write!(f, "solver failed: {e}"),
            DrugError::System(e) => write!(f, "system construction failed: {e}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for DrugError {}

impl From<MetricsError> for DrugError {
    fn from(e: MetricsError) -> Self {
        DrugError::Metrics(e)
    }
}

impl From<SolverError> for DrugError {
    fn from(e: SolverError) -> Self {
        DrugError::Solver(e)
    }
}

impl From<PossysError> for DrugError {
    fn from(e: PossysError) -> Self {
        DrugError::System(e)
    }
}

/// A dose-design instance: the treated system, the closed-loop norm to
/// minimize, and the quadratic dose penalty used by the sparsity modes.
#[derive(Debug, Clone, PartialEq)]
pub struct TherapyProblem {
    sys: PositiveSystem,
    metric: Metric,
    r: Matrix,
}

impl TherapyProblem {
    /// Builds a problem with the identity dose penalty.
    pub fn new(sys: PositiveSystem, metric: Metric) -> Self {
        let m = sys.input_dim();
        TherapyProblem {
            sys,
            metric,
            r: Matrix::identity(m, m),
        }
    }

    /// Builds a problem with a custom dose penalty, which must be a
    /// symmetric positive definite matrix of size `input_dim`.
    pub fn with_quadratic(
        sys: PositiveSystem,
        metric: Metric,
        r: Matrix,
    ) -> Result<Self, DrugError> {
        let m = sys.input_dim();
        if r.nrows() != m || r.ncols() != m {
            return Err(DrugError::BadParameters(format!(
                "dose penalty must be {m}x{m}, got {}x{}",
                r.nrows(),
                r.ncols()
            )));
        }
        if !r.iter().all(|x| x.is_finite()) {
            return Err(DrugError::BadParameters(String::from(
                "dose penalty contains non-finite entries",
            )));
        }
        let skew = (&r - r.transpose()).amax();
        if skew > 1e-12 * (1.0 + r.amax()) {
            return Err(DrugError::BadParameters(String::from(
                "dose penalty must be symmetric",
            )));
        }
        if nalgebra::Cholesky::new(r.clone()).is_none() {
            return Err(DrugError::BadParameters(String::from(
                "dose penalty must be positive definite",
            )));
        }
        Ok(TherapyProblem { sys, metric, r })
    }

    pub fn system(&self) -> &PositiveSystem {
        &self.sys
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    pub fn dose_penalty(&self) -> &Matrix {
        &self.r
    }

    /// Number of available drugs.
    pub fn num_drugs(&self) -> usize {
        self.sys.input_dim()
    }

    /// The design objective `J(u) + u^T R u`, infinite when `u` fails to
    /// stabilize the system.
    pub fn regularized_objective(&self, u: &Vector) -> Result<f64, DrugError> {
        let j = self.metric.value(&self.sys, u)?;
        Ok(j + (u.transpose() * &self.r * u)[(0, 0)])
    }
}

/// One recorded point of the sparsity homotopy.
#[derive(Debug, Clone, PartialEq)]
pub struct HomotopyStep {
    /// Sparsity weight at which the point was solved.
    pub gamma: f64,
    /// Dose vector returned by the inner solver.
    pub u: Vector,
    /// Number of active drugs at [`ACTIVE_TOL`].
    pub cardinality: usize,
    /// Closed-loop norm at `u`, without the penalty terms.
    pub j: f64,
}

/// Doses re-optimized on a fixed support.
#[derive(Debug, Clone, PartialEq)]
pub struct PolishedDesign {
    /// Number of drugs the design may use, the size of `support`.
    pub cardinality: usize,
    /// Allowed drug indices, ascending.
    pub support: Vec<usize>,
    /// Full-length dose vector, exactly zero off the support.
    pub u: Vector,
    /// `J(u) + u^T R u` at the polished doses.
    pub objective: f64,
}

/// The recorded sweep of the sparsity homotopy plus the polished designs.
#[derive(Debug, Clone, PartialEq)]
pub struct HomotopyPath {
    /// One entry per visited penalty level, in increasing order.
    pub steps: Vec<HomotopyStep>,
    /// One polished design per distinct cardinality seen along the path,
    /// plus the full-support baseline; ascending cardinality.
    pub polished: Vec<PolishedDesign>,
}

/// Indices of the doses counted as active at [`ACTIVE_TOL`], ascending.
pub fn active_support(u: &Vector) -> Vec<usize> {
    (0..u.len()).filter(|&i| u[i].abs() > ACTIVE_TOL).collect()
}

/// Fifty logarithmically spaced sparsity weights between 0.01 and 10.
pub fn default_gamma_grid() -> Vec<f64> {
    let (lo, hi, count) = (0.01f64, 10.0f64, 50usize);
    let (llo, lhi) = (lo.ln(), hi.ln());
    (0..count)
        .map(|k| {
            if k == count - 1 {
                hi
            } else {
                (llo + (lhi - llo) * k as f64 / (count - 1) as f64).exp()
            }
        })
        .collect()
}

/// Minimizes the closed-loop norm over the dose simplex
/// `{u >= 0, sum u = budget}`.
///
/// Starting points are scanned among the simplex vertices and the uniform
/// split; if none of them stabilizes the system the problem is reported as
/// infeasible. The returned iterate is exactly projected back onto the
/// simplex.
pub fn budget_design(p: &TherapyProblem, budget: f64) -> Result<SolveReport, DrugError> {
    if !(budget > 0.0) || !budget.is_finite() {
        return Err(DrugError::BadParameters(format!(
            "budget must be positive and finite, got {budget}"
        )));
    }
    let m = p.num_drugs();
    let mut candidates: Vec<Vector> = (0..m)
        .map(|i| {
            let mut v = Vector::zeros(m);
            v[i] = budget;
            v
        })
        .collect();
    candidates.push(Vector::from_element(m, budget / m as f64));

    let mut start: Option<(f64, Vector)> = None;
    for cand in candidates {
        let j = p.metric.value(&p.sys, &cand)?;
        if j.is_finite() && start.as_ref().is_none_or(|(best, _)| j < *best) {
            start = Some((j, cand));
        }
    }
    let Some((_, u0)) = start else {
        return Err(DrugError::Infeasible(String::from(
            "no simplex vertex or uniform split stabilizes the system",
        )));
    };

    let set = ConstraintSet::Simplex { total: budget };
    let mut report = match p.metric {
        Metric::H2 => {
            let f = H2Objective { sys: &p.sys };
            let opts = SolverOptions {
                max_iter: 20_000,
                tol: 1e-8,
                ..SolverOptions::default()
            };
            proximal_gradient(&f, &Regularizer::Constraint(set), &u0, &opts)?
        }
        Metric::Hinf => {
            let f = HinfObjective { sys: &p.sys };
            let opts = SolverOptions {
                max_iter: 300,
                tol: 1e-7,
                stationarity_tol: 1e-7,
                ..SolverOptions::default()
            };
            mm_solver(
                &f,
                &Regularizer::Constraint(set),
                &u0,
                &Vector::zeros(m),
                1.0,
                &opts,
            )?
        }
    };
    report.u = project_simplex(&report.u, budget);
    Ok(report)
}

/// Sweeps the reweighted l1 homotopy until at most `target` drugs remain.
///
/// At each grid level the penalized problem is re-solved and the weights
/// are refreshed as `w_i = 1/(u_i + epsilon)`, up to [`REWEIGHT_SWEEPS`]
/// times or until the active set stops changing, with the previous
/// solution as warm start throughout. Every level is recorded; once the
/// active set is small enough, each distinct cardinality seen along the
/// path (and the full support) is polished. A grid that ends with too
/// many active drugs yields [`DrugError::TargetUnreachable`] carrying the
/// path collected so far.
pub fn sparsity_homotopy(
    p: &TherapyProblem,
    target: usize,
    gamma_grid: &[f64],
    epsilon: f64,
) -> Result<HomotopyPath, DrugError> {
    let m = p.num_drugs();
    if target == 0 || target > m {
        return Err(DrugError::BadParameters(format!(
            "target drug count must lie in 1..={m}, got {target}"
        )));
    }
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(DrugError::BadParameters(format!(
            "reweighting offset must be positive and finite, got {epsilon}"
        )));
    }
    if gamma_grid.is_empty() {
        return Err(DrugError::BadParameters(String::from(
            "the penalty grid must be nonempty",
        )));
    }
    if gamma_grid.iter().any(|g| !g.is_finite() || *g < 0.0) {
        return Err(DrugError::BadParameters(String::from(
            "penalty levels must be finite and nonnegative",
        )));
    }
    if gamma_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(DrugError::BadParameters(String::from(
            "penalty levels must be strictly increasing",
        )));
    }

    let mut u = stabilizing_start(p)?;
    let objective = RegularizedMetric { p };
    let opts = homotopy_options();
    let mut weights = Vector::from_element(m, 1.0);
    let mut last_support: Option<Vec<usize>> = None;
    let mut steps: Vec<HomotopyStep> = Vec::new();
    let mut reached = false;

    'grid: for &gamma in gamma_grid {
        for _ in 0..REWEIGHT_SWEEPS {
            let reg = Regularizer::NonnegL1 {
                gamma,
                weights: weights.clone(),
            };
            let report = mm_solver(&objective, &reg, &u, &Vector::zeros(m), 1.0, &opts)?;
            let cand = clamp_nonneg(report.u);
            let warm_value = p.regularized_objective(&u)? + reg.value(&u);
            let cand_value = p.regularized_objective(&cand)? + reg.value(&cand);
            if cand_value <= warm_value {
                u = cand;
            }
            let support = active_support(&u);
            for i in 0..m {
                weights[i] = 1.0 / (u[i].max(0.0) + epsilon);
            }
            let settled = last_support.as_ref() == Some(&support);
            last_support = Some(support);
            if settled {
                break;
            }
        }
        let cardinality = active_support(&u).len();
        let j = p.metric.value(&p.sys, &u)?;
        steps.push(HomotopyStep {
            gamma,
            u: u.clone(),
            cardinality,
            j,
        });
        if cardinality <= target {
            reached = true;
            break 'grid;
        }
    }

    let polished = polish_along(p, &steps)?;
    let path = HomotopyPath { steps, polished };
    if reached {
        Ok(path)
    } else {
        Err(DrugError::TargetUnreachable(path))
    }
}

/// Re-optimizes the doses on a fixed support.
///
/// The reduced problem in the supported doses minimizes `J + u^T R u`
/// over the nonnegative orthant; all other entries of the returned vector
/// are exactly zero. Feasibility of the support is decided by a dose ray
/// scan (uniform and single-drug rays over a geometric scale range), and
/// an empty support is feasible exactly when the untreated system is
/// already stable.
pub fn polish(p: &TherapyProblem, support: &[usize]) -> Result<PolishedDesign, DrugError> {
    polish_with_warm(p, support, None)
}

/// Percent objective degradation of each polished design relative to the
/// largest-support baseline, as `(cardinality, percent)` rows in
/// ascending cardinality order.
pub fn degradation_report(path: &HomotopyPath) -> Vec<(usize, f64)> {
    let Some(full) = path
        .polished
        .iter()
        .max_by(|a, b| a.cardinality.cmp(&b.cardinality))
    else {
        return Vec::new();
    };
    let mut rows: Vec<(usize, f64)> = path
        .polished
        .iter()
        .map(|d| (d.cardinality, 100.0 * (d.objective / full.objective - 1.0)))
        .collect();
    rows.sort_by(|a, b| a.0.cmp(&b.0));
    rows
}

/// `J + u^T R u` of a therapy problem as a subgradient bundle, sharing
/// the active-block structure of the underlying norm.
struct RegularizedMetric<'a> {
    p: &'a TherapyProblem,
}

impl RegularizedMetric<'_> {
    fn quad_value(&self, u: &Vector) -> f64 {
        (u.transpose() * &self.p.r * u)[(0, 0)]
    }

    fn quad_gradient(&self, u: &Vector) -> Vector {
        (&self.p.r + self.p.r.transpose()) * u
    }
}

impl BundleObjective for RegularizedMetric<'_> {
    fn value(&self, u: &Vector) -> Result<f64, SolverError> {
        Ok(self.p.metric.value(&self.p.sys, u)? + self.quad_value(u))
    }

    fn bundle(&self, u: &Vector) -> Result<SubgradientBundle, SolverError> {
        self.bundle_within(u, TIE_TOL)
    }

    fn bundle_within(&self, u: &Vector, rel_tie: f64) -> Result<SubgradientBundle, SolverError> {
        let q = self.quad_value(u);
        let g = self.quad_gradient(u);
        match self.p.metric {
            Metric::H2 => {
                let value = metrics::j2(&self.p.sys, u)? + q;
                let gradient = metrics::grad_j2(&self.p.sys, u)? + &g;
                Ok(SubgradientBundle {
                    value,
                    blocks: vec![BlockSubgradient {
                        index: 0,
                        value,
                        gradient,
                    }],
                    tie_tolerance: rel_tie * (1.0 + value),
                })
            }
            Metric::Hinf => {
                let mut bundle = metrics::jinf_blocks_with_tolerance(&self.p.sys, u, rel_tie)?;
                bundle.value += q;
                for block in &mut bundle.blocks {
                    block.value += q;
                    block.gradient += &g;
                }
                Ok(bundle)
            }
        }
    }
}

fn homotopy_options() -> SolverOptions {
    SolverOptions {
        max_iter: 200,
        tol: 1e-8,
        stationarity_tol: 1e-7,
        ..SolverOptions::default()
    }
}

fn clamp_nonneg(mut v: Vector) -> Vector {
    for x in v.iter_mut() {
        if *x < 0.0 {
            *x = 0.0;
        }
    }
    v
}

/// Scans uniform and single-drug dose rays over a geometric scale range
/// for a stabilizing point.
fn stabilizing_start(p: &TherapyProblem) -> Result<Vector, DrugError> {
    let m = p.num_drugs();
    let mut scale = RAY_SCALE_MIN;
    while scale <= RAY_SCALE_MAX {
        let uniform = Vector::from_element(m, scale);
        if p.metric.value(&p.sys, &uniform)?.is_finite() {
            return Ok(uniform);
        }
        for i in 0..m {
            let mut v = Vector::zeros(m);
            v[i] = scale;
            if p.metric.value(&p.sys, &v)?.is_finite() {
                return Ok(v);
            }
        }
        scale *= 2.0;
    }
    Err(DrugError::Infeasible(String::from(
        "no stabilizing dose found on the uniform and single-drug rays",
    )))
}

fn polish_along(
    p: &TherapyProblem,
    steps: &[HomotopyStep],
) -> Result<Vec<PolishedDesign>, DrugError> {
    let m = p.num_drugs();
    let mut chosen: BTreeMap<usize, (Vec<usize>, Option<Vector>)> = BTreeMap::new();
    for step in steps {
        let support = active_support(&step.u);
        chosen.insert(support.len(), (support, Some(step.u.clone())));
    }
    chosen
        .entry(m)
        .or_insert(((0..m).collect(), steps.first().map(|s| s.u.clone())));

    let mut polished = Vec::with_capacity(chosen.len());
    for (_, (support, warm)) in chosen {
        polished.push(polish_with_warm(p, &support, warm.as_ref())?);
    }
    Ok(polished)
}

fn polish_with_warm(
    p: &TherapyProblem,
    support_in: &[usize],
    warm: Option<&Vector>,
) -> Result<PolishedDesign, DrugError> {
    let m = p.num_drugs();
    let mut support = support_in.to_vec();
    support.sort_unstable();
    if support.iter().any(|&i| i >= m) {
        return Err(DrugError::BadParameters(format!(
            "support indices must lie below {m}, got {support:?}"
        )));
    }
    if support.windows(2).any(|w| w[0] == w[1]) {
        return Err(DrugError::BadParameters(format!(
            "support indices must be distinct, got {support:?}"
        )));
    }

    if support.is_empty() {
        let u = Vector::zeros(m);
        let j = p.metric.value(&p.sys, &u)?;
        if !j.is_finite() {
            return Err(DrugError::Infeasible(String::from(
                "the untreated system is unstable, so the empty support is infeasible",
            )));
        }
        return Ok(PolishedDesign {
            cardinality: 0,
            support,
            u,
            objective: j,
        });
    }

    let k = support.len();
    let n = p.sys.state_dim();
    let d = p.sys.d();
    let d_s = Matrix::from_fn(n, k, |row, col| d[(row, support[col])]);
    let reduced_sys = PositiveSystem::new(
        p.sys.a().clone(),
        p.sys.b().clone(),
        p.sys.c().clone(),
        d_s,
    )?;
    let r_s = Matrix::from_fn(k, k, |i, j| p.r[(support[i], support[j])]);
    let reduced = TherapyProblem {
        sys: reduced_sys,
        metric: p.metric,
        r: r_s,
    };

    let mut v0: Option<Vector> = None;
    if let Some(w) = warm {
        if w.len() == m {
            let v = Vector::from_fn(k, |i, _| w[support[i]].max(0.0));
            if reduced.metric.value(&reduced.sys, &v)?.is_finite() {
                v0 = Some(v);
            }
        }
    }
    let v0 = match v0 {
        Some(v) => v,
        None => stabilizing_start(&reduced).map_err(|_| {
            DrugError::Infeasible(format!(
                "no stabilizing dose found on the support {support:?}"
            ))
        })?,
    };

    let objective = RegularizedMetric { p: &reduced };
    let report = mm_solver(
        &objective,
        &Regularizer::Constraint(ConstraintSet::NonnegOrthant),
        &v0,
        &Vector::zeros(k),
        1.0,
        &homotopy_options(),
    )?;
    let endpoint = clamp_nonneg(report.u);
    let v = if reduced.regularized_objective(&endpoint)? <= reduced.regularized_objective(&v0)? {
        endpoint
    } else {
        v0
    };

    let mut u = Vector::zeros(m);
    for (i, &col) in support.iter().enumerate() {
        u[col] = v[i];
    }
    let objective_value = p.regularized_objective(&u)?;
    if !objective_value.is_finite() {
        return Err(DrugError::Infeasible(format!(
            "polishing left the support {support:?} without a stabilizing dose"
        )));
    }
    Ok(PolishedDesign {
        cardinality: k,
        support,
        u,
        objective: objective_value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_problem(a: f64, metric: Metric) -> TherapyProblem {
        let sys = PositiveSystem::new(
            Matrix::from_row_slice(1, 1, &[a]),
            Matrix::identity(1, 1),
            Matrix::identity(1, 1),
            Matrix::from_row_slice(1, 1, &[-1.0]),
        )
        .unwrap();
        TherapyProblem::new(sys, metric)
    }

    fn decoupled_pair() -> PositiveSystem {
        PositiveSystem::new(
            Matrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]),
            Matrix::identity(2, 2),
            Matrix::identity(2, 2),
            Matrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, -1.0]),
        )
        .unwrap()
    }

    #[test]
    fn quadratic_penalty_validation_catches_bad_weights() {
        let sys = decoupled_pair();
        let wrong_shape = Matrix::identity(3, 3);
        assert!(matches!(
            TherapyProblem::with_quadratic(sys.clone(), Metric::H2, wrong_shape),
            Err(DrugError::BadParameters(_))
        ));
        let skewed = Matrix::from_row_slice(2, 2, &[1.0, 0.5, -0.5, 1.0]);
        assert!(matches!(
            TherapyProblem::with_quadratic(sys.clone(), Metric::H2, skewed),
            Err(DrugError::BadParameters(_))
        ));
        let indefinite = Matrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(
            TherapyProblem::with_quadratic(sys.clone(), Metric::H2, indefinite),
            Err(DrugError::BadParameters(_))
        ));
        let valid = Matrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let p = TherapyProblem::with_quadratic(sys.clone(), Metric::H2, valid).unwrap();
        assert_eq!(p.num_drugs(), 2);
        let default = TherapyProblem::new(sys, Metric::Hinf);
        assert_eq!(default.dose_penalty(), &Matrix::identity(2, 2));
    }

    #[test]
    fn default_grid_is_log_spaced_and_increasing() {
        let grid = default_gamma_grid();
        assert_eq!(grid.len(), 50);
        assert!((grid[0] - 0.01).abs() < 1e-15);
        assert_eq!(*grid.last().unwrap(), 10.0);
        assert!(grid.windows(2).all(|w| w[0] < w[1]));
        let ratios: Vec<f64> = grid.windows(2).map(|w| w[1] / w[0]).collect();
        for pair in ratios.windows(2) {
            assert!((pair[0] - pair[1]).abs() < 1e-9);
        }
    }

    #[test]
    fn active_support_uses_the_absolute_threshold() {
        let u = Vector::from_row_slice(&[0.0, 1e-9, 2e-8, 5.0]);
        assert_eq!(active_support(&u), vec![2, 3]);
    }

    #[test]
    fn homotopy_rejects_malformed_inputs() {
        let p = scalar_problem(1.0, Metric::H2);
        let grid = [0.1, 1.0];
        assert!(matches!(
            sparsity_homotopy(&p, 0, &grid, 1e-4),
            Err(DrugError::BadParameters(_))
        ));
        assert!(matches!(
            sparsity_homotopy(&p, 2, &grid, 1e-4),
            Err(DrugError::BadParameters(_))
        ));
        assert!(matches!(
            sparsity_homotopy(&p, 1, &grid, 0.0),
            Err(DrugError::BadParameters(_))
        ));
        assert!(matches!(
            sparsity_homotopy(&p, 1, &[], 1e-4),
            Err(DrugError::BadParameters(_))
        ));
        assert!(matches!(
            sparsity_homotopy(&p, 1, &[1.0, 0.5], 1e-4),
            Err(DrugError::BadParameters(_))
        ));
        assert!(matches!(
            sparsity_homotopy(&p, 1, &[-1.0, 0.5], 1e-4),
            Err(DrugError::BadParameters(_))
        ));
        assert!(matches!(
            sparsity_homotopy(&p, 1, &[0.5, f64::NAN], 1e-4),
            Err(DrugError::BadParameters(_))
        ));
        assert!(matches!(
            budget_design(&p, 0.0),
            Err(DrugError::BadParameters(_))
        ));
    }

    #[test]
    fn single_drug_budget_is_forced_to_the_vertex() {
        for metric in [Metric::H2, Metric::Hinf] {
            let p = scalar_problem(1.0, metric);
            let report = budget_design(&p, 3.0).unwrap();
            assert!((report.u[0] - 3.0).abs() <= 1e-12);
            assert!(report.stationarity_residual <= 1e-6);
            let expected = match metric {
                Metric::H2 => 0.25,
                Metric::Hinf => 0.5,
            };
            let j = metric.value(p.system(), &report.u).unwrap();
            assert!((j - expected).abs() <= 1e-9);
        }
    }

    #[test]
    fn empty_support_polish_reflects_open_loop_stability() {
        let stable = scalar_problem(-1.0, Metric::H2);
        let design = polish(&stable, &[]).unwrap();
        assert_eq!(design.cardinality, 0);
        assert_eq!(design.u[0], 0.0);
        assert!((design.objective - 0.5).abs() <= 1e-12);

        let unstable = scalar_problem(1.0, Metric::H2);
        assert!(matches!(
            polish(&unstable, &[]),
            Err(DrugError::Infeasible(_))
        ));
        assert!(matches!(
            polish(&unstable, &[5]),
            Err(DrugError::BadParameters(_))
        ));
        assert!(matches!(
            polish(&unstable, &[0, 0]),
            Err(DrugError::BadParameters(_))
        ));
    }

    #[test]
    fn polish_matches_a_scalar_grid_search() {
        let p = scalar_problem(1.0, Metric::H2);
        let design = polish(&p, &[0]).unwrap();

        let objective = |v: f64| 0.5 / (v - 1.0) + v * v;
        let mut best = f64::INFINITY;
        let mut v = 1.0001;
        while v < 6.0 {
            best = best.min(objective(v));
            v += 1e-5;
        }
        assert!(
            (design.objective - best).abs() <= 1e-6 * (1.0 + best),
            "polished {} vs grid {best}",
            design.objective
        );
        assert_eq!(design.support, vec![0]);
    }

    #[test]
    fn degradation_uses_the_largest_support_as_baseline() {
        let path = HomotopyPath {
            steps: Vec::new(),
            polished: vec![
                PolishedDesign {
                    cardinality: 1,
                    support: vec![0],
                    u: Vector::from_row_slice(&[2.0, 0.0]),
                    objective: 2.0,
                },
                PolishedDesign {
                    cardinality: 2,
                    support: vec![0, 1],
                    u: Vector::from_row_slice(&[1.0, 1.0]),
                    objective: 1.0,
                },
            ],
        };
        let rows = degradation_report(&path);
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].0, 1);
        assert!((rows[0].1 - 100.0).abs() <= 1e-12);
        assert_eq!(rows[1].0, 2);
        assert!(rows[1].1.abs() <= 1e-12);
        assert!(degradation_report(&HomotopyPath {
            steps: Vec::new(),
            polished: Vec::new(),
        })
        .is_empty());
    }

    #[test]
    fn regularized_bundle_shifts_every_block() {
        let sys = decoupled_pair();
        let p = TherapyProblem::new(sys.clone(), Metric::Hinf);
        let composite = RegularizedMetric { p: &p };
        let u = Vector::from_row_slice(&[2.0, 2.0]);

        let plain = metrics::jinf_blocks(&sys, &u).unwrap();
        let shifted = composite.bundle(&u).unwrap();
        assert_eq!(plain.blocks.len(), 2);
        assert_eq!(shifted.blocks.len(), 2);
        let q = 8.0;
        assert!((shifted.value - (plain.value + q)).abs() <= 1e-12);
        for (a, b) in plain.blocks.iter().zip(shifted.blocks.iter()) {
            assert!((b.value - (a.value + q)).abs() <= 1e-12);
            let diff = (&b.gradient - &a.gradient) - Vector::from_row_slice(&[4.0, 4.0]);
            assert!(diff.amax() <= 1e-12);
        }

        let p2 = TherapyProblem::new(sys.clone(), Metric::H2);
        let composite2 = RegularizedMetric { p: &p2 };
        let single = composite2.bundle(&u).unwrap();
        assert_eq!(single.blocks.len(), 1);
        let expected = metrics::j2(&sys, &u).unwrap() + q;
        assert!((single.value - expected).abs() <= 1e-12);
        let expected_grad = metrics::grad_j2(&sys, &u).unwrap() + Vector::from_row_slice(&[4.0, 4.0]);
        assert!((&single.blocks[0].gradient - &expected_grad).amax() <= 1e-12);
    }

    #[test]
    fn ray_scan_finds_a_stabilizing_dose_or_reports_infeasible() {
        let p = scalar_problem(1.0, Metric::H2);
        let start = stabilizing_start(&p).unwrap();
        assert!(p.metric.value(p.system(), &start).unwrap().is_finite());

        let hopeless = PositiveSystem::new(
            Matrix::from_row_slice(1, 1, &[1.0]),
            Matrix::identity(1, 1),
            Matrix::identity(1, 1),
            Matrix::from_row_slice(1, 1, &[0.0]),
        )
        .unwrap();
        let p = TherapyProblem::new(hopeless, Metric::H2);
        assert!(matches!(
            stabilizing_start(&p),
            Err(DrugError::Infeasible(_))
        ));
    }
}
