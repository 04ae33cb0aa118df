//! Closed-loop performance metrics and their first-order information.
//!
//! Two disturbance-amplification measures are provided for the closed loop
//! `A_cl(u) = A + diag(D u)`:
//!
//! * `j2`: the squared H2 norm `<C^T C, X_c>` with `X_c` the controllability
//!   Gramian, quantifying the average response to impulsive disturbances;
//! * `jinf`: the H∞ norm, which for internally positive systems is attained
//!   at zero frequency and equals the largest singular value of
//!   `-C A_cl^{-1} B`.
//!
//! Both are `+inf` when the closed loop is not Hurwitz. `grad_j2` returns
//! the exact gradient of `j2`; `jinf_blocks` decomposes the system along the
//! weakly connected components of the graph of `A` and returns one
//! subgradient per component whose norm ties the maximum, from which
//! [`optimal_subgradient_direction`] and [`stationarity_check`] derive
//! certified descent directions and stationarity residuals.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::numerics::{
    self, principal_svd, solve_lp, solve_lyapunov, LpOutcome, LpProblem, NumericsError,
    HURWITZ_TOL,
};
use crate::possys::{PositiveSystem, PossysError};
use crate::{Matrix, Vector};

#[cfg(not(feature = "std"))]
#[allow(unused_imports)]
use nalgebra::{ComplexField as _, RealField as _};

/// Relative tolerance for a block to count as achieving the maximum norm.
pub const TIE_TOL: f64 = 1e-8;

/// Which closed-loop norm an optimization problem targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    /// The squared H2 norm computed by [`j2`].
    H2,
    /// The H∞ norm computed by [`jinf`].
    Hinf,
}

impl Metric {
    /// Stable lowercase name used in serialized reports.
    pub fn name(&self) -> &'static str {
        match self {
            Metric::H2 => "h2",
            Metric::Hinf => "hinf",
        }
    }

    /// Evaluates the metric on the closed loop at `u`, `+inf` when the
    /// closed loop is not Hurwitz.
    pub fn value(&self, sys: &PositiveSystem, u: &Vector) -> Result<f64, MetricsError> {
        match self {
            Metric::H2 => j2(sys, u),
            Metric::Hinf => jinf(sys, u),
        }
    }
}

/// Relative threshold below which a predicted descent rate is not trusted.
pub const DESCENT_TOL: f64 = 1e-12;

/// Errors from metric evaluation.
#[derive(Debug, Clone, PartialEq)]
pub enum MetricsError {
    /// Operand shapes are inconsistent.
    Dimension(String),
    /// The closed loop is not Hurwitz where a finite value or gradient was
    /// required.
    NonHurwitz { abscissa: f64 },
    /// The block decomposition assumptions do not hold for this system.
    AssumptionViolation(String),
    /// Invalid system data.
    System(PossysError),
    /// A linear-algebra kernel failed.
    Numerics(NumericsError),
    /// An internal linear program had no certified optimum.
    LpFailure(&'static str),
    /// A matrix required to be positive definite is not.
    Singular,
}

impl core::fmt::Display for MetricsError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            MetricsError::Dimension(what) => write!(f, "dimension mismatch: {what}"),
            MetricsError::NonHurwitz { abscissa } => {
                write!(f, "closed loop is not Hurwitz (abscissa {abscissa:e})")
            }
            MetricsError::AssumptionViolation(what) => write!(f, "assumption violation: {what}"),
            MetricsError::System(e) => write!(f, "{e}"),
            MetricsError::Numerics(e) => write!(f, "{e}"),
            MetricsError::LpFailure(what) => write!(f, "linear program failed: {what}"),
            MetricsError::Singular => write!(f, "matrix is not positive definite"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for MetricsError {}

impl From<PossysError> for MetricsError {
    fn from(e: PossysError) -> Self {
        MetricsError::System(e)
    }
}

fn lift(e: NumericsError) -> MetricsError {
    match e {
        NumericsError::NonHurwitz { abscissa } => MetricsError::NonHurwitz { abscissa },
        other => MetricsError::Numerics(other),
    }
}

/// Controllability and observability Gramians of the closed loop.
#[derive(Debug, Clone, PartialEq)]
pub struct GramianPair {
    /// Solution of `A_cl X_c + X_c A_cl^T + B B^T = 0`.
    pub xc: Matrix,
    /// Solution of `A_cl^T X_o + X_o A_cl + C^T C = 0`.
    pub xo: Matrix,
}

/// Solves both Lyapunov equations for the closed loop at `u`.
pub fn gramians(sys: &PositiveSystem, u: &Vector) -> Result<GramianPair, MetricsError> {
    let acl = sys.closed_loop(u)?;
    let xc = solve_lyapunov(&acl, &(sys.b() * sys.b().transpose())).map_err(lift)?;
    let xo = solve_lyapunov(&acl.transpose(), &(sys.c().transpose() * sys.c())).map_err(lift)?;
    Ok(GramianPair { xc, xo })
}

/// Squared H2 norm of the closed loop at `u`, or `+inf` when the closed
/// loop is not Hurwitz.
pub fn j2(sys: &PositiveSystem, u: &Vector) -> Result<f64, MetricsError> {
    let acl = sys.closed_loop(u)?;
    match solve_lyapunov(&acl, &(sys.b() * sys.b().transpose())) {
        Ok(xc) => Ok((sys.c() * xc * sys.c().transpose()).trace()),
        Err(NumericsError::NonHurwitz { .. }) => Ok(f64::INFINITY),
        Err(e) => Err(MetricsError::Numerics(e)),
    }
}

/// Gradient of [`j2`] at a stabilizing `u`: `2 D^T diag(X_c X_o)`.
pub fn grad_j2(sys: &PositiveSystem, u: &Vector) -> Result<Vector, MetricsError> {
    let pair = gramians(sys, u)?;
    Ok(sys.adjoint_k(&(pair.xc * pair.xo))? * 2.0)
}

/// H∞ norm of the closed loop at `u`, or `+inf` when the closed loop is
/// not Hurwitz. For internally positive systems the norm is attained at
/// zero frequency, so it equals the largest singular value of
/// `-C A_cl^{-1} B`.
pub fn jinf(sys: &PositiveSystem, u: &Vector) -> Result<f64, MetricsError> {
    let acl = sys.closed_loop(u)?;
    let rho = numerics::spectral_abscissa(&acl).map_err(lift)?;
    if rho >= -HURWITZ_TOL {
        return Ok(f64::INFINITY);
    }
    let lu = acl.lu();
    let x = lu
        .solve(sys.b())
        .ok_or(MetricsError::Numerics(NumericsError::Singular))?;
    let m = -(sys.c() * x);
    Ok(principal_svd(&m).map_err(lift)?.sigma)
}

/// One weakly connected block of the closed loop together with its norm
/// and the corresponding subgradient of [`jinf`].
#[derive(Debug, Clone, PartialEq)]
pub struct BlockSubgradient {
    /// Position of the block among all components, ordered by their
    /// smallest state index.
    pub index: usize,
    /// H∞ norm of the block.
    pub value: f64,
    /// Subgradient of the overall norm contributed by this block, a vector
    /// of length `input_dim`.
    pub gradient: Vector,
}

/// The blocks of the closed loop whose H∞ norm ties the maximum, each with
/// its subgradient. When exactly one block is listed, the norm is
/// differentiable at `u` and the single gradient is the derivative.
#[derive(Debug, Clone, PartialEq)]
pub struct SubgradientBundle {
    /// H∞ norm of the full system, the max over all blocks.
    pub value: f64,
    /// Blocks within `tie_tolerance` of `value`, in ascending index order.
    pub blocks: Vec<BlockSubgradient>,
    /// Absolute tolerance used to decide ties, `rel * (1 + value)` for the
    /// relative tolerance the bundle was built with (`TIE_TOL` by default).
    pub tie_tolerance: f64,
}

impl SubgradientBundle {
    /// True when the norm is differentiable at the evaluation point, i.e.
    /// a single block achieves the maximum.
    pub fn is_smooth(&self) -> bool {
        self.blocks.len() == 1
    }
}

/// Partitions `0..n` into the weakly connected components of the graph
/// with an edge `{i, j}` whenever `a[(i, j)]` or `a[(j, i)]` is nonzero.
/// Components are sorted internally and ordered by smallest member.
fn weak_components(a: &Matrix) -> Vec<Vec<usize>> {
    let n = a.nrows();
    let mut comp = vec![usize::MAX; n];
    let mut count = 0;
    let mut stack = Vec::new();
    for start in 0..n {
        if comp[start] != usize::MAX {
            continue;
        }
        comp[start] = count;
        stack.push(start);
        while let Some(i) = stack.pop() {
            for j in 0..n {
                if j != i
                    && comp[j] == usize::MAX
                    && (a[(i, j)] != 0.0 || a[(j, i)] != 0.0)
                {
                    comp[j] = count;
                    stack.push(j);
                }
            }
        }
        count += 1;
    }
    let mut out = vec![Vec::new(); count];
    for (i, &c) in comp.iter().enumerate() {
        out[c].push(i);
    }
    out
}

/// Maps each column of `m` (or row, when `by_rows`) to the component its
/// support lies in; `None` for zero columns. Fails when some support spans
/// two components.
fn assign_channels(
    m: &Matrix,
    comp_of: &[usize],
    by_rows: bool,
    name: &str,
) -> Result<Vec<Option<usize>>, MetricsError> {
    let channels = if by_rows { m.nrows() } else { m.ncols() };
    let states = if by_rows { m.ncols() } else { m.nrows() };
    let mut out = Vec::with_capacity(channels);
    for ch in 0..channels {
        let mut assigned = None;
        for s in 0..states {
            let entry = if by_rows { m[(ch, s)] } else { m[(s, ch)] };
            if entry != 0.0 {
                match assigned {
                    None => assigned = Some(comp_of[s]),
                    Some(c) if c != comp_of[s] => {
                        let kind = if by_rows { "row" } else { "column" };
                        return Err(MetricsError::AssumptionViolation(format!(
                            "{kind} {ch} of {name} couples distinct weakly connected \
                             components of A"
                        )));
                    }
                    Some(_) => {}
                }
            }
        }
        out.push(assigned);
    }
    Ok(out)
}

/// Evaluates the H∞ norm blockwise and returns every block achieving the
/// maximum together with its subgradient.
///
/// The block structure is discovered from the weakly connected components
/// of the graph of `A`; each disturbance column of `B` and output row of
/// `C` must act on a single component. For a block with principal singular
/// triplet `(sigma, w, v)` of `-C_i A_i^{-1} B_i`, the subgradient is
/// `D^T diag(x y^T)` with `x = A_i^{-1} B_i v` and `y = A_i^{-T} C_i^T w`,
/// embedded into the full state ordering. A block counts as achieving the
/// maximum when its value is within `TIE_TOL * (1 + value)` of it.
pub fn jinf_blocks(sys: &PositiveSystem, u: &Vector) -> Result<SubgradientBundle, MetricsError> {
    jinf_blocks_with_tolerance(sys, u, TIE_TOL)
}

/// Like [`jinf_blocks`] but with a caller-chosen relative tie tolerance:
/// every block within `rel_tie * (1 + value)` of the achieved value is
/// listed. Descent methods widen the window to their working accuracy so
/// that near-ties enter the direction program before the iterates start
/// zigzagging across a nonsmooth valley.
pub fn jinf_blocks_with_tolerance(
    sys: &PositiveSystem,
    u: &Vector,
    rel_tie: f64,
) -> Result<SubgradientBundle, MetricsError> {
    if !(rel_tie >= 0.0) || !rel_tie.is_finite() {
        return Err(MetricsError::Dimension(format!(
            "tie tolerance must be nonnegative and finite, got {rel_tie}"
        )));
    }
    let acl = sys.closed_loop(u)?;
    let rho = numerics::spectral_abscissa(&acl).map_err(lift)?;
    if rho >= -HURWITZ_TOL {
        return Err(MetricsError::NonHurwitz { abscissa: rho });
    }
    let n = sys.state_dim();
    let comps = weak_components(sys.a());
    let mut comp_of = vec![0usize; n];
    for (ci, comp) in comps.iter().enumerate() {
        for &s in comp {
            comp_of[s] = ci;
        }
    }
    let b_comp = assign_channels(sys.b(), &comp_of, false, "B")?;
    let c_comp = assign_channels(sys.c(), &comp_of, true, "C")?;

    let mut blocks = Vec::with_capacity(comps.len());
    for (ci, comp) in comps.iter().enumerate() {
        let b_cols: Vec<usize> = (0..sys.disturbance_dim())
            .filter(|&d| b_comp[d] == Some(ci))
            .collect();
        let c_rows: Vec<usize> = (0..sys.output_dim())
            .filter(|&q| c_comp[q] == Some(ci))
            .collect();
        if b_cols.is_empty() || c_rows.is_empty() {
            blocks.push(BlockSubgradient {
                index: ci,
                value: 0.0,
                gradient: Vector::zeros(sys.input_dim()),
            });
            continue;
        }
        let a_i = acl.select_rows(comp.iter()).select_columns(comp.iter());
        let b_i = sys.b().select_rows(comp.iter()).select_columns(b_cols.iter());
        let c_i = sys.c().select_rows(c_rows.iter()).select_columns(comp.iter());
        let lu = a_i.clone().lu();
        let x_b = lu
            .solve(&b_i)
            .ok_or(MetricsError::Numerics(NumericsError::Singular))?;
        let m_i = -(&c_i * &x_b);
        let triplet = principal_svd(&m_i).map_err(lift)?;
        let x = lu
            .solve(&(&b_i * &triplet.right))
            .ok_or(MetricsError::Numerics(NumericsError::Singular))?;
        let y = a_i
            .transpose()
            .lu()
            .solve(&(c_i.transpose() * &triplet.left))
            .ok_or(MetricsError::Numerics(NumericsError::Singular))?;
        let mut diag = Vector::zeros(n);
        for (local, &global) in comp.iter().enumerate() {
            diag[global] = x[local] * y[local];
        }
        blocks.push(BlockSubgradient {
            index: ci,
            value: triplet.sigma,
            gradient: sys.d().transpose() * diag,
        });
    }

    let value = blocks.iter().fold(0.0f64, |m, b| m.max(b.value));
    let tie_tolerance = rel_tie * (1.0 + value);
    let kept: Vec<BlockSubgradient> = blocks
        .into_iter()
        .filter(|b| value - b.value <= tie_tolerance)
        .collect();
    Ok(SubgradientBundle {
        value,
        blocks: kept,
        tie_tolerance,
    })
}

fn check_bundle(bundle: &SubgradientBundle, grad_g: &Vector) -> Result<(), MetricsError> {
    if bundle.blocks.is_empty() {
        return Err(MetricsError::AssumptionViolation(String::from(
            "subgradient bundle lists no blocks",
        )));
    }
    for b in &bundle.blocks {
        if b.gradient.len() != grad_g.len() {
            return Err(MetricsError::Dimension(format!(
                "block {} gradient has length {}, smooth gradient has length {}",
                b.index,
                b.gradient.len(),
                grad_g.len()
            )));
        }
    }
    Ok(())
}

/// Finds the convex combination of active-block subgradients that yields
/// the steepest certified descent direction for the sum of the blockwise
/// norm and a smooth term with gradient `grad_g`.
///
/// With `h_j = f_j + grad_g`, the combination solves
///
/// ```text
///     minimize    t
///     subject to  -h_j^T H alpha <= t,   sum alpha = 1,   alpha >= 0,
/// ```
///
/// and the returned direction is `v = -(F alpha + grad_g)`. The boolean is
/// true when the optimal `t` is below `-DESCENT_TOL * (1 + |grad_g|)`, so
/// `v` is a descent direction for every active block; when false the point
/// may be stationary and [`stationarity_check`] decides.
pub fn optimal_subgradient_direction(
    bundle: &SubgradientBundle,
    grad_g: &Vector,
) -> Result<(Vector, bool), MetricsError> {
    check_bundle(bundle, grad_g)?;
    let m = grad_g.len();
    let k = bundle.blocks.len();
    let eps = DESCENT_TOL * (1.0 + grad_g.norm());

    if k == 1 {
        let h = &bundle.blocks[0].gradient + grad_g;
        let t = -h.norm_squared();
        return Ok((-h, t < -eps));
    }

    let mut h_cols = Matrix::zeros(m, k);
    for (j, b) in bundle.blocks.iter().enumerate() {
        h_cols.set_column(j, &(&b.gradient + grad_g));
    }
    let gram = h_cols.transpose() * &h_cols;

    let mut objective = Vector::zeros(k + 1);
    objective[k] = 1.0;
    let mut a_ub = Matrix::zeros(k, k + 1);
    for j in 0..k {
        for i in 0..k {
            a_ub[(j, i)] = -gram[(j, i)];
        }
        a_ub[(j, k)] = -1.0;
    }
    let mut a_eq = Matrix::zeros(1, k + 1);
    for i in 0..k {
        a_eq[(0, i)] = 1.0;
    }
    let mut lower = vec![Some(0.0); k];
    lower.push(None);
    let problem = LpProblem {
        objective,
        a_ub,
        b_ub: Vector::zeros(k),
        a_eq,
        b_eq: Vector::from_element(1, 1.0),
        lower,
    };
    match solve_lp(&problem).map_err(lift)? {
        LpOutcome::Optimal(sol) => {
            let mut v = -grad_g.clone();
            for (j, b) in bundle.blocks.iter().enumerate() {
                v -= &b.gradient * sol.x[j];
            }
            Ok((v, sol.x[k] < -eps))
        }
        LpOutcome::Infeasible => Err(MetricsError::LpFailure("direction program infeasible")),
        LpOutcome::Unbounded => Err(MetricsError::LpFailure("direction program unbounded")),
    }
}

/// Stationarity residual together with the minimizing combination weights.
pub(crate) fn stationarity_weights(
    bundle: &SubgradientBundle,
    grad_g: &Vector,
) -> Result<(f64, Vec<f64>), MetricsError> {
    check_bundle(bundle, grad_g)?;
    let m = grad_g.len();
    let k = bundle.blocks.len();

    if k == 1 {
        let h = &bundle.blocks[0].gradient + grad_g;
        return Ok((h.amax(), vec![1.0]));
    }

    let mut objective = Vector::zeros(k + 1);
    objective[k] = 1.0;
    let mut a_ub = Matrix::zeros(2 * m, k + 1);
    let mut b_ub = Vector::zeros(2 * m);
    for i in 0..m {
        for (j, b) in bundle.blocks.iter().enumerate() {
            a_ub[(i, j)] = b.gradient[i];
            a_ub[(m + i, j)] = -b.gradient[i];
        }
        a_ub[(i, k)] = -1.0;
        a_ub[(m + i, k)] = -1.0;
        b_ub[i] = -grad_g[i];
        b_ub[m + i] = grad_g[i];
    }
    let mut a_eq = Matrix::zeros(1, k + 1);
    for j in 0..k {
        a_eq[(0, j)] = 1.0;
    }
    let problem = LpProblem {
        objective,
        a_ub,
        b_ub,
        a_eq,
        b_eq: Vector::from_element(1, 1.0),
        lower: vec![Some(0.0); k + 1],
    };
    match solve_lp(&problem).map_err(lift)? {
        LpOutcome::Optimal(sol) => {
            let alpha = (0..k).map(|j| sol.x[j]).collect();
            Ok((sol.objective, alpha))
        }
        LpOutcome::Infeasible => Err(MetricsError::LpFailure("stationarity program infeasible")),
        LpOutcome::Unbounded => Err(MetricsError::LpFailure("stationarity program unbounded")),
    }
}

/// Distance to stationarity at a nondifferentiable point: the smallest
/// `max` norm of `F alpha + grad_g` over convex combination weights
/// `alpha` of the active-block subgradients. A residual at roundoff level
/// certifies that zero lies in the subdifferential of the composite
/// objective.
pub fn stationarity_check(
    bundle: &SubgradientBundle,
    grad_g: &Vector,
) -> Result<f64, MetricsError> {
    Ok(stationarity_weights(bundle, grad_g)?.0)
}

/// Upper bounds on the leader-selection metrics obtained by symmetrizing
/// the Laplacian: with `M = (L + L^T)/2 + diag(u)`, returns
/// `(trace(M^{-1}) / 2, lambda_max(M^{-1}))`. Both bound the corresponding
/// metric of the directed system from above and are tight when `L` is
/// symmetric.
pub fn symmetric_part_bounds(l: &Matrix, u: &Vector) -> Result<(f64, f64), MetricsError> {
    let n = l.nrows();
    if l.ncols() != n {
        return Err(MetricsError::Dimension(format!(
            "Laplacian must be square, got {}x{}",
            n,
            l.ncols()
        )));
    }
    if u.len() != n {
        return Err(MetricsError::Dimension(format!(
            "weight vector has length {}, expected {n}",
            u.len()
        )));
    }
    if !l.iter().all(|x| x.is_finite()) || !u.iter().all(|x| x.is_finite()) {
        return Err(MetricsError::Numerics(NumericsError::NonFinite));
    }
    let mut m = (l + l.transpose()) * 0.5;
    for i in 0..n {
        m[(i, i)] += u[i];
    }
    let eigen = nalgebra::SymmetricEigen::new(m);
    let mut lambda_min = f64::INFINITY;
    let mut trace_inv = 0.0;
    for &lambda in eigen.eigenvalues.iter() {
        lambda_min = lambda_min.min(lambda);
        trace_inv += 1.0 / lambda;
    }
    if lambda_min <= 0.0 {
        return Err(MetricsError::Singular);
    }
    Ok((0.5 * trace_inv, 1.0 / lambda_min))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn scalar_sys() -> PositiveSystem {
        PositiveSystem::new(
            Matrix::zeros(1, 1),
            Matrix::from_element(1, 1, 1.0),
            Matrix::from_element(1, 1, 1.0),
            Matrix::from_element(1, 1, -1.0),
        )
        .unwrap()
    }

    fn two_block_sys() -> PositiveSystem {
        let a = Matrix::from_row_slice(
            4,
            4,
            &[
                1.0, 1.0, 0.0, 0.0, //
                1.0, 1.0, 0.0, 0.0, //
                0.0, 0.0, 1.0, 1.0, //
                0.0, 0.0, 1.0, 1.0,
            ],
        );
        let d = Matrix::from_row_slice(4, 2, &[-1.0, 0.0, -1.0, 0.1, 0.1, -1.0, 0.0, -1.0]);
        PositiveSystem::new(a, Matrix::identity(4, 4), Matrix::identity(4, 4), d).unwrap()
    }

    fn bundle_of(entries: &[(usize, f64, &[f64])]) -> SubgradientBundle {
        let value = entries.iter().fold(0.0f64, |m, e| m.max(e.1));
        SubgradientBundle {
            value,
            blocks: entries
                .iter()
                .map(|(i, v, g)| BlockSubgradient {
                    index: *i,
                    value: *v,
                    gradient: Vector::from_row_slice(g),
                })
                .collect(),
            tie_tolerance: TIE_TOL * (1.0 + value),
        }
    }

    #[test]
    fn scalar_h2_is_inverse_of_twice_the_gain() {
        let sys = scalar_sys();
        let u = Vector::from_element(1, 1.0);
        assert_relative_eq!(j2(&sys, &u).unwrap(), 0.5, epsilon = 1e-12);
        let g = grad_j2(&sys, &u).unwrap();
        assert_relative_eq!(g[0], -0.5, epsilon = 1e-12);
    }

    #[test]
    fn scalar_hinf_is_inverse_of_the_gain() {
        let sys = scalar_sys();
        let u = Vector::from_element(1, 2.0);
        assert_relative_eq!(jinf(&sys, &u).unwrap(), 0.5, epsilon = 1e-12);
        let bundle = jinf_blocks(&sys, &u).unwrap();
        assert!(bundle.is_smooth());
        assert_relative_eq!(bundle.blocks[0].gradient[0], -0.25, epsilon = 1e-12);
    }

    #[test]
    fn unstable_loop_reports_infinite_metrics() {
        let sys = scalar_sys();
        let u = Vector::zeros(1);
        assert_eq!(j2(&sys, &u).unwrap(), f64::INFINITY);
        assert_eq!(jinf(&sys, &u).unwrap(), f64::INFINITY);
        assert!(matches!(
            grad_j2(&sys, &u),
            Err(MetricsError::NonHurwitz { .. })
        ));
        assert!(matches!(
            jinf_blocks(&sys, &u),
            Err(MetricsError::NonHurwitz { .. })
        ));
    }

    #[test]
    fn gramians_solve_their_equations() {
        let a = Matrix::from_row_slice(3, 3, &[-2.0, 0.5, 0.0, 0.3, -1.5, 0.2, 0.0, 0.4, -1.0]);
        let b = Matrix::from_row_slice(3, 2, &[1.0, 0.0, 0.5, 0.5, 0.0, 1.0]);
        let c = Matrix::from_row_slice(2, 3, &[1.0, 0.0, 0.2, 0.0, 1.0, 0.0]);
        let d = Matrix::from_diagonal(&Vector::from_row_slice(&[-1.0, -1.0, -1.0]));
        let sys = PositiveSystem::new(a.clone(), b.clone(), c.clone(), d).unwrap();
        let u = Vector::from_row_slice(&[0.1, 0.2, 0.3]);
        let pair = gramians(&sys, &u).unwrap();
        let acl = sys.closed_loop(&u).unwrap();
        let rc = &acl * &pair.xc + &pair.xc * acl.transpose() + &b * b.transpose();
        let ro = acl.transpose() * &pair.xo + &pair.xo * &acl + c.transpose() * &c;
        assert!(rc.amax() < 1e-9);
        assert!(ro.amax() < 1e-9);
        assert!(pair.xc.min() > -1e-10);
        assert!(pair.xo.min() > -1e-10);
    }

    #[test]
    fn tied_blocks_are_both_listed() {
        let sys = two_block_sys();
        let u = Vector::from_row_slice(&[2.5, 2.5]);
        let bundle = jinf_blocks(&sys, &u).unwrap();
        assert_eq!(bundle.blocks.len(), 2);
        assert!((bundle.blocks[0].value - bundle.blocks[1].value).abs() <= bundle.tie_tolerance);

        let expected = (2.75 + 4.0625f64.sqrt()) / 2.0 / 0.875;
        assert_relative_eq!(jinf(&sys, &u).unwrap(), expected, epsilon = 1e-12);
        assert_relative_eq!(bundle.value, expected, epsilon = 1e-12);
    }

    #[test]
    fn off_tie_point_keeps_a_single_block() {
        let sys = two_block_sys();
        let u = Vector::from_row_slice(&[3.0, 2.5]);
        let bundle = jinf_blocks(&sys, &u).unwrap();
        assert_eq!(bundle.blocks.len(), 1);
        assert_eq!(bundle.blocks[0].index, 1);
        assert_relative_eq!(bundle.value, jinf(&sys, &u).unwrap(), epsilon = 1e-12);
    }

    #[test]
    fn coupling_input_is_rejected() {
        let a = Matrix::from_diagonal(&Vector::from_row_slice(&[-1.0, -1.0]));
        let b = Matrix::from_row_slice(2, 1, &[1.0, 1.0]);
        let c = Matrix::identity(2, 2);
        let d = Matrix::from_diagonal(&Vector::from_row_slice(&[-1.0, -1.0]));
        let sys = PositiveSystem::new(a, b, c, d).unwrap();
        let u = Vector::from_row_slice(&[0.5, 0.5]);
        assert!(matches!(
            jinf_blocks(&sys, &u),
            Err(MetricsError::AssumptionViolation(_))
        ));
    }

    #[test]
    fn single_block_direction_is_forced() {
        let bundle = bundle_of(&[(0, 1.0, &[1.0, -2.0])]);
        let grad_g = Vector::from_row_slice(&[0.5, 0.5]);
        let (v, certified) = optimal_subgradient_direction(&bundle, &grad_g).unwrap();
        assert!(certified);
        assert_relative_eq!(v[0], -1.5, epsilon = 1e-14);
        assert_relative_eq!(v[1], 1.5, epsilon = 1e-14);
    }

    #[test]
    fn antipodal_gradients_admit_no_descent() {
        let bundle = bundle_of(&[(0, 1.0, &[1.0, 0.0]), (1, 1.0, &[-1.0, 0.0])]);
        let grad_g = Vector::zeros(2);
        let (v, certified) = optimal_subgradient_direction(&bundle, &grad_g).unwrap();
        assert!(!certified);
        assert!(v.norm() < 1e-9);
        let residual = stationarity_check(&bundle, &grad_g).unwrap();
        assert!(residual < 1e-9);
    }

    #[test]
    fn stationarity_detects_cancelling_gradient() {
        let bundle = bundle_of(&[(0, 2.0, &[0.3, -0.7, 0.1])]);
        let grad_g = Vector::from_row_slice(&[-0.3, 0.7, -0.1]);
        let residual = stationarity_check(&bundle, &grad_g).unwrap();
        assert!(residual < 1e-15);
    }

    #[test]
    fn descent_direction_cuts_both_active_blocks() {
        let sys = two_block_sys();
        let u = Vector::from_row_slice(&[2.5, 2.5]);
        let bundle = jinf_blocks(&sys, &u).unwrap();
        assert_eq!(bundle.blocks.len(), 2);
        let grad_g = &u * 2.0;
        let (v, certified) = optimal_subgradient_direction(&bundle, &grad_g).unwrap();
        assert!(certified);
        for b in &bundle.blocks {
            assert!(v.dot(&(&b.gradient + &grad_g)) < 0.0);
        }
    }

    #[test]
    fn symmetric_bounds_match_single_node_metrics() {
        let l = Matrix::zeros(1, 1);
        let u = Vector::from_element(1, 2.0);
        let (b2, binf) = symmetric_part_bounds(&l, &u).unwrap();
        assert_relative_eq!(b2, 0.25, epsilon = 1e-14);
        assert_relative_eq!(binf, 0.5, epsilon = 1e-14);
    }

    #[test]
    fn symmetric_bounds_are_tight_for_symmetric_laplacians() {
        let l = Matrix::from_row_slice(3, 3, &[1.0, -1.0, 0.0, -1.0, 2.0, -1.0, 0.0, -1.0, 1.0]);
        let u = Vector::from_row_slice(&[1.0, 0.0, 0.0]);
        let (b2, binf) = symmetric_part_bounds(&l, &u).unwrap();
        let sys = PositiveSystem::new(
            -l.clone(),
            Matrix::identity(3, 3),
            Matrix::identity(3, 3),
            -Matrix::identity(3, 3),
        )
        .unwrap();
        assert_relative_eq!(b2, j2(&sys, &u).unwrap(), epsilon = 1e-12);
        assert_relative_eq!(binf, jinf(&sys, &u).unwrap(), epsilon = 1e-12);
    }

    #[test]
    fn indefinite_symmetric_part_is_rejected() {
        let l = Matrix::zeros(2, 2);
        let u = Vector::from_row_slice(&[1.0, 0.0]);
        assert_eq!(symmetric_part_bounds(&l, &u), Err(MetricsError::Singular));
    }
}
