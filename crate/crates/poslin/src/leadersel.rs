//! Leader selection on directed consensus networks.
//!
//! Placing `N` leaders with feedback weight `kappa` on a weighted digraph
//! turns the disturbance-driven consensus dynamics into the closed loop
//! `-(L + diag(u))`, where `u` is the 0/`kappa` indicator of the leader
//! set. This module decides which sets stabilize that loop, computes a
//! certified convex lower bound on the achievable norm, rounds the relaxed
//! solution into candidate sets, tightens candidates by greedy swaps,
//! enumerates an undirected surrogate in the few- or many-leader regimes,
//! and provides an exhaustive oracle for small instances. All node indices
//! are zero-based.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::metrics::{self, Metric, MetricsError};
use crate::netgraph::DirectedNetwork;
use crate::numerics::{solve_lp, LpOutcome, LpProblem, NumericsError};
use crate::possys::{PositiveSystem, PossysError};
use crate::solvers::{
    mm_solver, proximal_gradient, ConstraintSet, H2Objective, HinfObjective, Regularizer,
    SolverError, SolverOptions,
};
use crate::{Matrix, Vector};

/// Largest number of candidate sets [`exhaustive_oracle`] will visit.
pub const EXHAUSTIVE_CAP: f64 = 1e6;

/// Candidate counts the undirected surrogate enumerates: at most this many
/// leaders, or at least `n` minus this many.
pub const SURROGATE_REGIME: usize = 3;

const SWAP_IMPROVEMENT_TOL: f64 = 1e-10;

/// Errors from leader-selection routines.
#[derive(Debug, Clone, PartialEq)]
pub enum LeaderError {
    /// Invalid problem parameters or a malformed leader set.
    BadParameters(String),
    /// No stabilizing set of the requested size exists: every leader
    /// subset needs a leader of its own.
    Infeasible { n_leaders: usize, subsets: usize },
    /// The undirected surrogate only enumerates very small or very large
    /// leader counts.
    RegimeUnsupported { n_leaders: usize, n: usize },
    /// No candidate set makes the symmetrized closed loop positive
    /// definite, so the surrogate bounds do not exist.
    SurrogateSingular,
    /// The exhaustive oracle would visit more than [`EXHAUSTIVE_CAP`] sets.
    TooLarge { combinations: f64 },
    /// Metric evaluation failed.
    Metrics(MetricsError),
    /// The relaxation solver failed.
    Solver(SolverError),
    /// System construction failed.
    System(PossysError),
    /// A linear-algebra kernel failed.
    Numerics(NumericsError),
}

impl core::fmt::Display for LeaderError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            LeaderError::BadParameters(msg) => write!(f, "bad parameters: {msg}"),
            LeaderError::Infeasible { n_leaders, subsets } => write!(
                f,
                "no stabilizing set of {n_leaders} leaders: the network has \
                 {subsets} leader subsets and each needs a leader"
            ),
            LeaderError::RegimeUnsupported { n_leaders, n } => write!(
                f,
                "undirected surrogate supports at most {SURROGATE_REGIME} or at least \
                 {} leaders on {n} nodes, got {n_leaders}",
                n.saturating_sub(SURROGATE_REGIME)
            ),
            LeaderError::SurrogateSingular => write!(
                f,
                "symmetrized closed loop is not positive definite for any candidate set"
            ),
            LeaderError::TooLarge { combinations } => write!(
                f,
                "exhaustive search over {combinations:.3e} sets exceeds the cap of {EXHAUSTIVE_CAP:.0e}"
            ),
            LeaderError::Metrics(e) => write!(f, "metric evaluation failed: {e}"),
            LeaderError::Solver(e) => write!(f, "relaxation solve failed: {e}"),
            LeaderError::System(e) => write!(f, "system construction failed: {e}"),
            LeaderError::Numerics(e) => write!(f, "numerical kernel failed: {e}"),
        }
    }
}

impl From<MetricsError> for LeaderError {
    fn from(e: MetricsError) -> Self {
        LeaderError::Metrics(e)
    }
}

impl From<SolverError> for LeaderError {
    fn from(e: SolverError) -> Self {
        LeaderError::Solver(e)
    }
}

impl From<PossysError> for LeaderError {
    fn from(e: PossysError) -> Self {
        LeaderError::System(e)
    }
}

impl From<NumericsError> for LeaderError {
    fn from(e: NumericsError) -> Self {
        LeaderError::Numerics(e)
    }
}

/// A leader-placement problem on a directed network.
#[derive(Debug, Clone)]
pub struct LeaderProblem {
    net: DirectedNetwork,
    n_leaders: usize,
    kappa: f64,
    metric: Metric,
    sys: PositiveSystem,
}

impl LeaderProblem {
    /// Builds the problem together with its dynamics: state matrix `-L`,
    /// identity input and output maps, and leader weights entering the
    /// diagonal with a negative sign. Requires `1 <= n_leaders <= n` and
    /// a positive finite `kappa`.
    pub fn new(
        net: DirectedNetwork,
        n_leaders: usize,
        kappa: f64,
        metric: Metric,
    ) -> Result<Self, LeaderError> {
        let n = net.num_nodes();
        if n_leaders == 0 || n_leaders > n {
            return Err(LeaderError::BadParameters(format!(
                "leader count must lie in 1..={n}, got {n_leaders}"
            )));
        }
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(LeaderError::BadParameters(format!(
                "leader weight must be positive and finite, got {kappa}"
            )));
        }
        let eye = Matrix::identity(n, n);
        let sys = PositiveSystem::new(-net.laplacian(), eye.clone(), eye.clone(), -eye)?;
        Ok(LeaderProblem {
            net,
            n_leaders,
            kappa,
            metric,
            sys,
        })
    }

    pub fn net(&self) -> &DirectedNetwork {
        &self.net
    }

    pub fn n_leaders(&self) -> usize {
        self.n_leaders
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    /// The consensus dynamics the problem optimizes over.
    pub fn system(&self) -> &PositiveSystem {
        &self.sys
    }

    /// Closed-loop norm of a leader set, `+inf` when the set does not
    /// stabilize the network. The set must hold `n_leaders` distinct
    /// in-range nodes.
    pub fn set_objective(&self, leaders: &[usize]) -> Result<f64, LeaderError> {
        let sorted = self.validate_set(leaders)?;
        if !is_stabilizing(&self.net, &sorted) {
            return Ok(f64::INFINITY);
        }
        Ok(self.metric.value(&self.sys, &self.leader_vector(&sorted))?)
    }

    fn validate_set(&self, leaders: &[usize]) -> Result<Vec<usize>, LeaderError> {
        if leaders.len() != self.n_leaders {
            return Err(LeaderError::BadParameters(format!(
                "leader set has {} nodes, expected {}",
                leaders.len(),
                self.n_leaders
            )));
        }
        let mut sorted = leaders.to_vec();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(LeaderError::BadParameters(
                "leader set contains a duplicate node".into(),
            ));
        }
        let n = self.net.num_nodes();
        if sorted.last().is_some_and(|&i| i >= n) {
            return Err(LeaderError::BadParameters(format!(
                "leader index out of range for {n} nodes"
            )));
        }
        Ok(sorted)
    }

    fn leader_vector(&self, leaders: &[usize]) -> Vector {
        let mut u = Vector::zeros(self.net.num_nodes());
        for &i in leaders {
            u[i] = self.kappa;
        }
        u
    }
}

/// Outcome of a leader-selection run.
#[derive(Debug, Clone, PartialEq)]
pub struct LeaderResult {
    /// Selected leaders, sorted ascending.
    pub leaders: Vec<usize>,
    /// The 0/`kappa` weight vector of the selected set.
    pub u: Vector,
    /// Closed-loop norm achieved by the selected set.
    pub j: f64,
    /// Certified lower bound on the norm of every stabilizing set of the
    /// requested size.
    pub lower_bound: f64,
    /// Relative optimality gap `j / lower_bound - 1`.
    pub gap: f64,
    /// Name of the strategy that produced the set.
    pub method: &'static str,
    /// Present when the strategy had to fall back to another one.
    pub note: Option<String>,
}

/// Upper-bound strategies for [`select_leaders`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    /// Round the relaxed minimizer.
    Round,
    /// Round, then tighten by greedy swaps.
    RoundSwap,
    /// Optimize the undirected surrogate bound.
    Undirected,
    /// Evaluate all of the above and keep the best set.
    BestOf,
    /// Enumerate every set of the requested size.
    Exhaustive,
}

impl Strategy {
    /// Stable lowercase name used in serialized reports and CLI flags.
    pub fn name(&self) -> &'static str {
        match self {
            Strategy::Round => "round",
            Strategy::RoundSwap => "round+swap",
            Strategy::Undirected => "undirected",
            Strategy::BestOf => "best-of",
            Strategy::Exhaustive => "exhaustive",
        }
    }
}

/// True when every leader subset of the network contains a leader, which
/// holds exactly when `-(L + diag(u))` is Hurwitz for the 0/`kappa`
/// indicator `u` of the set, regardless of the positive weight `kappa`.
/// Nodes outside the network never help coverage.
pub fn is_stabilizing(net: &DirectedNetwork, leaders: &[usize]) -> bool {
    net.leader_subsets().is_covered(leaders)
}

/// Convex relaxation of the leader problem: minimizes the metric over
/// `0 <= u <= kappa` with total weight `n_leaders * kappa` and at least
/// `kappa` of weight on every leader subset, so every feasible point is
/// stabilizing. Returns a certified bound together with the relaxed
/// minimizer estimate: the bound adds to the achieved value a subgradient
/// cut minimized exactly over the polytope, so it underestimates every
/// feasible point of the relaxation, and hence every 0/`kappa` leader
/// vector, even when the iterative solve is inexact.
pub fn lower_bound(p: &LeaderProblem) -> Result<(f64, Vector), LeaderError> {
    let subsets = p.net.leader_subsets();
    if p.n_leaders < subsets.len() {
        return Err(LeaderError::Infeasible {
            n_leaders: p.n_leaders,
            subsets: subsets.len(),
        });
    }
    let n = p.net.num_nodes();
    let set = ConstraintSet::CappedSimplexWithFloors {
        count: p.n_leaders,
        cap: p.kappa,
        subsets: subsets.subsets.clone(),
    };
    let uniform = Vector::from_element(n, p.n_leaders as f64 * p.kappa / n as f64);
    let u0 = set.project(&uniform)?;
    let constraint = Regularizer::Constraint(set.clone());
    let report = match p.metric {
        Metric::H2 => {
            let opts = SolverOptions {
                max_iter: 4000,
                tol: 1e-10,
                ..SolverOptions::default()
            };
            proximal_gradient(&H2Objective { sys: &p.sys }, &constraint, &u0, &opts)?
        }
        Metric::Hinf => {
            let opts = SolverOptions {
                max_iter: 200,
                tol: 1e-8,
                stationarity_tol: 1e-7,
                ..SolverOptions::default()
            };
            mm_solver(
                &HinfObjective { sys: &p.sys },
                &constraint,
                &u0,
                &Vector::zeros(n),
                1.0,
                &opts,
            )?
        }
    };
    let u_hat = set.project(&report.u)?;
    let j_hat = p.metric.value(&p.sys, &u_hat)?;
    let cut = match p.metric {
        Metric::H2 => metrics::grad_j2(&p.sys, &u_hat)?,
        Metric::Hinf => {
            let bundle = metrics::jinf_blocks(&p.sys, &u_hat)?;
            bundle.blocks[0].gradient.clone()
        }
    };
    let cut_min = polytope_linear_minimum(&cut, p.n_leaders, p.kappa, &subsets.subsets)?;
    Ok((j_hat + cut_min - cut.dot(&u_hat), u_hat))
}

/// Minimizes `f^T u` exactly over the relaxation polytope.
fn polytope_linear_minimum(
    f: &Vector,
    count: usize,
    cap: f64,
    subsets: &[Vec<usize>],
) -> Result<f64, LeaderError> {
    let n = f.len();
    let k = subsets.len();
    let mut a_ub = Matrix::zeros(n + k, n);
    let mut b_ub = Vector::zeros(n + k);
    for i in 0..n {
        a_ub[(i, i)] = 1.0;
        b_ub[i] = cap;
    }
    for (j, s) in subsets.iter().enumerate() {
        for &i in s {
            a_ub[(n + j, i)] = -1.0;
        }
        b_ub[n + j] = -cap;
    }
    let lp = LpProblem {
        objective: f.clone(),
        a_ub,
        b_ub,
        a_eq: Matrix::from_element(1, n, 1.0),
        b_eq: Vector::from_element(1, count as f64 * cap),
        lower: vec![Some(0.0); n],
    };
    match solve_lp(&lp)? {
        LpOutcome::Optimal(sol) => Ok(sol.objective),
        _ => Err(LeaderError::Metrics(MetricsError::LpFailure(
            "bound-certificate program had no certified optimum",
        ))),
    }
}

/// Rounds a relaxed weight vector to a stabilizing leader set: the
/// heaviest node of each leader subset enters first, then the heaviest
/// remaining nodes fill the set, with every tie resolved toward the
/// lowest node index. Returns the set sorted ascending.
pub fn round_candidates(u_relaxed: &Vector, p: &LeaderProblem) -> Result<Vec<usize>, LeaderError> {
    let n = p.net.num_nodes();
    if u_relaxed.len() != n || !u_relaxed.iter().all(|x| x.is_finite()) {
        return Err(LeaderError::BadParameters(format!(
            "relaxed weights must be {n} finite values"
        )));
    }
    let subsets = p.net.leader_subsets();
    if p.n_leaders < subsets.len() {
        return Err(LeaderError::Infeasible {
            n_leaders: p.n_leaders,
            subsets: subsets.len(),
        });
    }
    let mut chosen: Vec<usize> = Vec::with_capacity(p.n_leaders);
    for s in &subsets.subsets {
        let mut best = s[0];
        for &i in &s[1..] {
            if u_relaxed[i] > u_relaxed[best] {
                best = i;
            }
        }
        chosen.push(best);
    }
    let mut rest: Vec<usize> = (0..n).filter(|i| !chosen.contains(i)).collect();
    rest.sort_by(|&a, &b| {
        u_relaxed[b]
            .partial_cmp(&u_relaxed[a])
            .unwrap_or(core::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    chosen.extend(rest.into_iter().take(p.n_leaders - chosen.len()));
    chosen.sort_unstable();
    Ok(chosen)
}

/// Tightens a stabilizing leader set by best-improvement swaps: every
/// (leader, follower) exchange that keeps the network stabilized is
/// scored, the best strictly improving one is applied, and the loop
/// stops once no swap improves the objective by more than `1e-10`
/// relative. Ties between swaps resolve toward the lexicographically
/// smallest set, so the outcome is deterministic.
pub fn greedy_swap(leaders: &[usize], p: &LeaderProblem) -> Result<Vec<usize>, LeaderError> {
    let mut current = p.validate_set(leaders)?;
    let subsets = p.net.leader_subsets();
    if !subsets.is_covered(&current) {
        return Err(LeaderError::BadParameters(
            "greedy swap needs a stabilizing starting set".into(),
        ));
    }
    let n = p.net.num_nodes();
    let mut j_cur = p.metric.value(&p.sys, &p.leader_vector(&current))?;
    loop {
        let mut best: Option<(f64, Vec<usize>)> = None;
        for slot in 0..current.len() {
            for node in 0..n {
                if current.contains(&node) {
                    continue;
                }
                let mut cand = current.clone();
                cand[slot] = node;
                cand.sort_unstable();
                if !subsets.is_covered(&cand) {
                    continue;
                }
                let j = p.metric.value(&p.sys, &p.leader_vector(&cand))?;
                let better = match &best {
                    None => true,
                    Some((bj, bset)) => j < *bj || (j == *bj && cand < *bset),
                };
                if better {
                    best = Some((j, cand));
                }
            }
        }
        match best {
            Some((j, cand)) if j < j_cur * (1.0 - SWAP_IMPROVEMENT_TOL) => {
                j_cur = j;
                current = cand;
            }
            _ => break,
        }
    }
    Ok(current)
}

/// Scores every candidate set of the requested size with the symmetrized
/// bound: with `M = (L + L^T)/2 + kappa * diag(indicator)`, the H2 bound
/// is `trace(M^{-1}) / 2` and the H∞ bound is the largest eigenvalue of
/// `M^{-1}`. Inverses propagate along the enumeration through rank-one
/// Sherman-Morrison updates of a base factorization; sets whose `M` is
/// singular score `+inf`. Entries appear in lexicographic order. Only
/// small (`n_leaders <= 3`) or large (`n_leaders >= n - 3`) counts are
/// supported.
pub fn surrogate_bound_table(p: &LeaderProblem) -> Result<Vec<(Vec<usize>, f64)>, LeaderError> {
    let n = p.net.num_nodes();
    let nl = p.n_leaders;
    if nl > SURROGATE_REGIME && nl + SURROGATE_REGIME < n {
        return Err(LeaderError::RegimeUnsupported { n_leaders: nl, n });
    }
    let l = p.net.laplacian();
    let ls = (&l + l.transpose()) * 0.5;
    if nl <= SURROGATE_REGIME {
        Ok(build_up_table(&ls, p.kappa, nl, p.metric))
    } else {
        downdate_table(&ls, p.kappa, nl, p.metric)
    }
}

/// Best leader set for the undirected surrogate: the arg-min of
/// [`surrogate_bound_table`] with ties resolved toward the
/// lexicographically smallest set. The winner should be re-evaluated on
/// the directed system for reporting.
pub fn undirected_candidates(p: &LeaderProblem) -> Result<Vec<usize>, LeaderError> {
    let table = surrogate_bound_table(p)?;
    let mut best: Option<&(Vec<usize>, f64)> = None;
    for entry in &table {
        if !entry.1.is_finite() {
            continue;
        }
        let better = best.is_none_or(|(_, b)| entry.1 < *b);
        if better {
            best = Some(entry);
        }
    }
    match best {
        Some((set, _)) => Ok(set.clone()),
        None => Err(LeaderError::SurrogateSingular),
    }
}

fn leader_matrix(ls: &Matrix, kappa: f64, set: &[usize]) -> Matrix {
    let mut m = ls.clone();
    for &i in set {
        m[(i, i)] += kappa;
    }
    m
}

fn pd_inverse(m: Matrix) -> Option<Matrix> {
    nalgebra::Cholesky::new(m).map(|c| c.inverse())
}

/// Inverse after adding `kappa e_i e_i^T`, from the inverse of a positive
/// definite matrix; the update never loses definiteness.
fn sm_add(inv: &Matrix, kappa: f64, i: usize) -> Matrix {
    let denom = 1.0 + kappa * inv[(i, i)];
    let col = inv.column(i).into_owned();
    inv - (&col * col.transpose()) * (kappa / denom)
}

/// Inverse after subtracting `kappa e_i e_i^T`, or `None` when the
/// downdate makes the matrix singular or indefinite.
fn sm_remove(inv: &Matrix, kappa: f64, i: usize) -> Option<Matrix> {
    let denom = 1.0 - kappa * inv[(i, i)];
    if denom <= 1e-10 {
        return None;
    }
    let col = inv.column(i).into_owned();
    Some(inv + (&col * col.transpose()) * (kappa / denom))
}

fn bound_from_inverse(inv: &Matrix, metric: Metric) -> f64 {
    match metric {
        Metric::H2 => 0.5 * inv.trace(),
        Metric::Hinf => {
            let sym = (inv + inv.transpose()) * 0.5;
            nalgebra::SymmetricEigen::new(sym).eigenvalues.max()
        }
    }
}

fn direct_bound(ls: &Matrix, kappa: f64, set: &[usize], metric: Metric) -> f64 {
    match pd_inverse(leader_matrix(ls, kappa, set)) {
        Some(inv) => bound_from_inverse(&inv, metric),
        None => f64::INFINITY,
    }
}

fn build_up_table(ls: &Matrix, kappa: f64, nl: usize, metric: Metric) -> Vec<(Vec<usize>, f64)> {
    let n = ls.nrows();
    let mut out = Vec::new();
    for i in 0..n {
        let inv_i = pd_inverse(leader_matrix(ls, kappa, &[i]));
        if nl == 1 {
            let b = inv_i
                .as_ref()
                .map_or(f64::INFINITY, |m| bound_from_inverse(m, metric));
            out.push((vec![i], b));
            continue;
        }
        for j in i + 1..n {
            let inv_ij = inv_i.as_ref().map(|m| sm_add(m, kappa, j));
            if nl == 2 {
                let b = match &inv_ij {
                    Some(m) => bound_from_inverse(m, metric),
                    None => direct_bound(ls, kappa, &[i, j], metric),
                };
                out.push((vec![i, j], b));
                continue;
            }
            for q in j + 1..n {
                let b = match &inv_ij {
                    Some(m) => bound_from_inverse(&sm_add(m, kappa, q), metric),
                    None => direct_bound(ls, kappa, &[i, j, q], metric),
                };
                out.push((vec![i, j, q], b));
            }
        }
    }
    out
}

fn downdate_table(
    ls: &Matrix,
    kappa: f64,
    nl: usize,
    metric: Metric,
) -> Result<Vec<(Vec<usize>, f64)>, LeaderError> {
    let n = ls.nrows();
    let all: Vec<usize> = (0..n).collect();
    let Some(base) = pd_inverse(leader_matrix(ls, kappa, &all)) else {
        return Err(LeaderError::SurrogateSingular);
    };
    let removed = n - nl;
    let complement = |drop: &[usize]| -> Vec<usize> {
        (0..n).filter(|i| !drop.contains(i)).collect()
    };
    let mut out = Vec::new();
    if removed == 0 {
        out.push((all, bound_from_inverse(&base, metric)));
        return Ok(out);
    }
    for i in 0..n {
        let inv_i = sm_remove(&base, kappa, i);
        if removed == 1 {
            let b = inv_i
                .as_ref()
                .map_or(f64::INFINITY, |m| bound_from_inverse(m, metric));
            out.push((complement(&[i]), b));
            continue;
        }
        for j in i + 1..n {
            let inv_ij = inv_i.as_ref().and_then(|m| sm_remove(m, kappa, j));
            if removed == 2 {
                let b = inv_ij
                    .as_ref()
                    .map_or(f64::INFINITY, |m| bound_from_inverse(m, metric));
                out.push((complement(&[i, j]), b));
                continue;
            }
            for q in j + 1..n {
                let b = inv_ij
                    .as_ref()
                    .and_then(|m| sm_remove(m, kappa, q))
                    .map_or(f64::INFINITY, |m| bound_from_inverse(&m, metric));
                out.push((complement(&[i, j, q]), b));
            }
        }
    }
    Ok(out)
}

/// Number of `k`-subsets of `n` elements, as a float so huge counts
/// saturate instead of overflowing.
fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    let mut c = 1.0;
    for i in 1..=k {
        c = c * (n - k + i) as f64 / i as f64;
    }
    c
}

/// Advances a sorted combination over `0..n` to its lexicographic
/// successor; returns `false` after the last one.
fn next_combination(c: &mut [usize], n: usize) -> bool {
    let k = c.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if c[i] < n - k + i {
            c[i] += 1;
            for j in i + 1..k {
                c[j] = c[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Evaluates every stabilizing set of the requested size and returns the
/// exact optimum with the certified relaxation bound attached. Ties on
/// the objective resolve toward the lexicographically smallest set.
pub fn exhaustive_oracle(p: &LeaderProblem) -> Result<LeaderResult, LeaderError> {
    let n = p.net.num_nodes();
    let combinations = binomial(n, p.n_leaders);
    if combinations > EXHAUSTIVE_CAP {
        return Err(LeaderError::TooLarge { combinations });
    }
    let (j_lb, _) = lower_bound(p)?;
    let subsets = p.net.leader_subsets();
    let mut set: Vec<usize> = (0..p.n_leaders).collect();
    let mut best: Option<(f64, Vec<usize>)> = None;
    loop {
        if subsets.is_covered(&set) {
            let j = p.metric.value(&p.sys, &p.leader_vector(&set))?;
            if best.as_ref().is_none_or(|(bj, _)| j < *bj) {
                best = Some((j, set.clone()));
            }
        }
        if !next_combination(&mut set, n) {
            break;
        }
    }
    let Some((j, leaders)) = best else {
        return Err(LeaderError::Infeasible {
            n_leaders: p.n_leaders,
            subsets: subsets.len(),
        });
    };
    Ok(finish(p, leaders, j, j_lb, "exhaustive", None))
}

fn finish(
    p: &LeaderProblem,
    leaders: Vec<usize>,
    j: f64,
    j_lb: f64,
    method: &'static str,
    note: Option<String>,
) -> LeaderResult {
    let u = p.leader_vector(&leaders);
    let gap = if j_lb > 0.0 {
        j / j_lb - 1.0
    } else {
        f64::INFINITY
    };
    LeaderResult {
        leaders,
        u,
        j,
        lower_bound: j_lb,
        gap,
        method,
        note,
    }
}

enum SurrogatePick {
    Set(Vec<usize>),
    Fallback(&'static str),
}

fn surrogate_or_reason(p: &LeaderProblem) -> Result<SurrogatePick, LeaderError> {
    match undirected_candidates(p) {
        Ok(set) if is_stabilizing(&p.net, &set) => Ok(SurrogatePick::Set(set)),
        Ok(_) => Ok(SurrogatePick::Fallback(
            "the surrogate winner does not stabilize the directed network",
        )),
        Err(LeaderError::RegimeUnsupported { .. }) => Ok(SurrogatePick::Fallback(
            "the surrogate supports only very few or very many leaders",
        )),
        Err(LeaderError::SurrogateSingular) => Ok(SurrogatePick::Fallback(
            "no candidate makes the symmetrized closed loop positive definite",
        )),
        Err(e) => Err(e),
    }
}

/// Runs the full pipeline: relaxation lower bound, candidate construction
/// by the chosen strategy, and gap reporting. The undirected strategy
/// falls back to rounding, with the reason recorded in the result note,
/// when the surrogate regime does not apply, when no candidate is
/// positive definite, or when the surrogate winner fails to stabilize the
/// directed network.
pub fn select_leaders(p: &LeaderProblem, strategy: Strategy) -> Result<LeaderResult, LeaderError> {
    if strategy == Strategy::Exhaustive {
        return exhaustive_oracle(p);
    }
    let (j_lb, u_rel) = lower_bound(p)?;
    let rounded = round_candidates(&u_rel, p)?;
    let (leaders, method, note) = match strategy {
        Strategy::Round => (rounded, "round", None),
        Strategy::RoundSwap => (greedy_swap(&rounded, p)?, "round+swap", None),
        Strategy::Undirected => match surrogate_or_reason(p)? {
            SurrogatePick::Set(set) => (set, "undirected", None),
            SurrogatePick::Fallback(reason) => (
                rounded,
                "undirected",
                Some(format!("{reason}; fell back to rounding")),
            ),
        },
        Strategy::BestOf => {
            let mut note = None;
            let mut candidates = vec![rounded.clone(), greedy_swap(&rounded, p)?];
            match surrogate_or_reason(p)? {
                SurrogatePick::Set(set) => candidates.push(set),
                SurrogatePick::Fallback(reason) => {
                    note = Some(format!("{reason}; compared rounding-based candidates only"));
                }
            }
            let mut best: Option<(f64, Vec<usize>)> = None;
            for cand in candidates {
                let j = p.metric.value(&p.sys, &p.leader_vector(&cand))?;
                let better = match &best {
                    None => true,
                    Some((bj, bset)) => j < *bj || (j == *bj && cand < *bset),
                };
                if better {
                    best = Some((j, cand));
                }
            }
            let (j, set) = best.expect("at least the rounded candidate is present");
            return Ok(finish(p, set, j, j_lb, "best-of", note));
        }
        Strategy::Exhaustive => unreachable!(),
    };
    let j = p.metric.value(&p.sys, &p.leader_vector(&leaders))?;
    Ok(finish(p, leaders, j, j_lb, method, note))
}
