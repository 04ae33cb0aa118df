//! Euclidean projections onto the feasible sets of the design problems
//! and the proximal operator of the weighted l1 norm.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::SolverError;
use crate::Vector;

#[cfg(not(feature = "std"))]
#[allow(unused_imports)]
use nalgebra::{ComplexField as _, RealField as _};

/// Maximum number of Dykstra sweeps before giving up.
const MAX_SWEEPS: usize = 100_000;

/// Feasible sets used by the design problems.
#[derive(Debug, Clone, PartialEq)]
pub enum ConstraintSet {
    /// `u >= 0`.
    NonnegOrthant,
    /// `u >= 0`, `sum u = total`.
    Simplex { total: f64 },
    /// `0 <= u <= cap`, `sum u = count * cap`.
    CappedSimplex { count: usize, cap: f64 },
    /// The capped simplex intersected with `sum_{i in S_j} u_i >= cap` for
    /// each of the disjoint index subsets `S_j`.
    CappedSimplexWithFloors {
        count: usize,
        cap: f64,
        subsets: Vec<Vec<usize>>,
    },
    /// `lower <= u <= upper` elementwise.
    Box { lower: Vector, upper: Vector },
}

impl ConstraintSet {
    /// Checks the parameters against a vector length `n`.
    pub fn validate(&self, n: usize) -> Result<(), SolverError> {
        match self {
            ConstraintSet::NonnegOrthant => Ok(()),
            ConstraintSet::Simplex { total } => {
                if !(*total > 0.0) || !total.is_finite() {
                    return Err(SolverError::BadParameters(format!(
                        "simplex total must be positive and finite, got {total}"
                    )));
                }
                Ok(())
            }
            ConstraintSet::CappedSimplex { count, cap } => {
                validate_capped(*count, *cap, n)
            }
            ConstraintSet::CappedSimplexWithFloors {
                count,
                cap,
                subsets,
            } => {
                validate_capped(*count, *cap, n)?;
                validate_subsets(subsets, *count, n)
            }
            ConstraintSet::Box { lower, upper } => {
                if lower.len() != n || upper.len() != n {
                    return Err(SolverError::BadParameters(format!(
                        "box bounds have lengths {} and {}, expected {n}",
                        lower.len(),
                        upper.len()
                    )));
                }
                if lower.iter().zip(upper.iter()).any(|(l, u)| l > u) {
                    return Err(SolverError::BadParameters(String::from(
                        "box has an empty coordinate interval",
                    )));
                }
                Ok(())
            }
        }
    }

    /// Euclidean projection of `y` onto the set.
    pub fn project(&self, y: &Vector) -> Result<Vector, SolverError> {
        self.validate(y.len())?;
        match self {
            ConstraintSet::NonnegOrthant => Ok(y.map(|x| x.max(0.0))),
            ConstraintSet::Simplex { total } => Ok(project_simplex(y, *total)),
            ConstraintSet::CappedSimplex { count, cap } => {
                project_capped_simplex(y, *count, *cap)
            }
            ConstraintSet::CappedSimplexWithFloors {
                count,
                cap,
                subsets,
            } => project_with_subset_floors(y, *count, *cap, subsets),
            ConstraintSet::Box { lower, upper } => Ok(Vector::from_iterator(
                y.len(),
                y.iter()
                    .zip(lower.iter().zip(upper.iter()))
                    .map(|(&x, (&l, &u))| x.clamp(l, u)),
            )),
        }
    }

    /// Worst constraint violation of `u`, zero when feasible.
    pub fn violation(&self, u: &Vector) -> f64 {
        match self {
            ConstraintSet::NonnegOrthant => (-u.min()).max(0.0),
            ConstraintSet::Simplex { total } => {
                (u.sum() - total).abs().max((-u.min()).max(0.0))
            }
            ConstraintSet::CappedSimplex { count, cap } => {
                let sum_gap = (u.sum() - *count as f64 * cap).abs();
                let below = (-u.min()).max(0.0);
                let above = (u.max() - cap).max(0.0);
                sum_gap.max(below).max(above)
            }
            ConstraintSet::CappedSimplexWithFloors {
                count,
                cap,
                subsets,
            } => {
                let base = ConstraintSet::CappedSimplex {
                    count: *count,
                    cap: *cap,
                }
                .violation(u);
                let floors = subsets
                    .iter()
                    .map(|s| (cap - s.iter().map(|&i| u[i]).sum::<f64>()).max(0.0))
                    .fold(0.0f64, f64::max);
                base.max(floors)
            }
            ConstraintSet::Box { lower, upper } => u
                .iter()
                .zip(lower.iter().zip(upper.iter()))
                .map(|(&x, (&l, &h))| (l - x).max(x - h).max(0.0))
                .fold(0.0f64, f64::max),
        }
    }
}

fn validate_capped(count: usize, cap: f64, n: usize) -> Result<(), SolverError> {
    if count == 0 || count > n {
        return Err(SolverError::BadParameters(format!(
            "capped simplex needs 1 <= count <= {n}, got {count}"
        )));
    }
    if !(cap > 0.0) || !cap.is_finite() {
        return Err(SolverError::BadParameters(format!(
            "capped simplex cap must be positive and finite, got {cap}"
        )));
    }
    Ok(())
}

fn validate_subsets(subsets: &[Vec<usize>], count: usize, n: usize) -> Result<(), SolverError> {
    if subsets.len() > count {
        return Err(SolverError::BadParameters(format!(
            "{} floor subsets exceed the budget of {count}",
            subsets.len()
        )));
    }
    let mut seen = vec![false; n];
    for (j, s) in subsets.iter().enumerate() {
        if s.is_empty() {
            return Err(SolverError::BadParameters(format!(
                "floor subset {j} is empty"
            )));
        }
        for &i in s {
            if i >= n {
                return Err(SolverError::BadParameters(format!(
                    "floor subset {j} references index {i} beyond length {n}"
                )));
            }
            if seen[i] {
                return Err(SolverError::BadParameters(format!(
                    "floor subsets overlap at index {i}"
                )));
            }
            seen[i] = true;
        }
    }
    Ok(())
}

/// Projection onto the scaled simplex `{u >= 0, sum u = total}`.
///
/// Uses the exact sort-and-threshold rule, so the result satisfies the
/// optimality conditions up to floating-point roundoff.
pub fn project_simplex(y: &Vector, total: f64) -> Vector {
    let n = y.len();
    let mut sorted: Vec<f64> = y.iter().copied().collect();
    sorted.sort_by(|a, b| b.partial_cmp(a).expect("non-finite entry"));
    let mut cumsum = 0.0;
    let mut theta = (y.sum() - total) / n as f64;
    for (k, &v) in sorted.iter().enumerate() {
        cumsum += v;
        let t = (cumsum - total) / (k + 1) as f64;
        if k + 1 == n || sorted[k + 1] <= t {
            theta = t;
            break;
        }
    }
    y.map(|x| (x - theta).max(0.0))
}

/// Projection onto the capped simplex `{0 <= u <= cap, sum u = count*cap}`.
///
/// The projection is `clamp(y - theta, 0, cap)` for the unique shift
/// `theta` balancing the sum; the shift is found exactly by scanning the
/// breakpoints of the piecewise-linear sum function.
pub fn project_capped_simplex(y: &Vector, count: usize, cap: f64) -> Result<Vector, SolverError> {
    let n = y.len();
    validate_capped(count, cap, n)?;
    if count == n {
        return Ok(Vector::from_element(n, cap));
    }
    let target = count as f64 * cap;

    let mut breakpoints: Vec<f64> = Vec::with_capacity(2 * n);
    for &v in y.iter() {
        breakpoints.push(v);
        breakpoints.push(v - cap);
    }
    breakpoints.sort_by(|a, b| a.partial_cmp(b).expect("non-finite entry"));

    let sum_at = |theta: f64| -> f64 {
        y.iter().map(|&v| (v - theta).clamp(0.0, cap)).sum()
    };

    // The sum decreases from n*cap to 0 as theta runs over the breakpoints.
    let mut lo = breakpoints[0];
    let mut hi = breakpoints[2 * n - 1];
    for pair in breakpoints.windows(2) {
        if sum_at(pair[1]) <= target {
            lo = pair[0];
            hi = pair[1];
            break;
        }
    }
    // Between adjacent breakpoints the active set is fixed, so the shift
    // solves a linear equation there.
    let mid = 0.5 * (lo + hi);
    let slope = y
        .iter()
        .filter(|&&v| v - mid > 0.0 && v - mid < cap)
        .count();
    let theta = if slope == 0 {
        hi
    } else {
        let s_lo = sum_at(lo);
        lo + (s_lo - target) / slope as f64
    };

    let mut x = y.map(|v| (v - theta).clamp(0.0, cap));
    let free: Vec<usize> = (0..n).filter(|&i| x[i] > 0.0 && x[i] < cap).collect();
    if !free.is_empty() {
        let drift = (target - x.sum()) / free.len() as f64;
        for i in free {
            x[i] = (x[i] + drift).clamp(0.0, cap);
        }
    }
    Ok(x)
}

/// Projection onto the capped simplex intersected with per-subset mass
/// floors, computed by Dykstra's alternating projections between the
/// capped simplex and the half-space product of the floors.
pub fn project_with_subset_floors(
    y: &Vector,
    count: usize,
    cap: f64,
    subsets: &[Vec<usize>],
) -> Result<Vector, SolverError> {
    let n = y.len();
    validate_capped(count, cap, n)?;
    validate_subsets(subsets, count, n)?;
    if subsets.is_empty() {
        return project_capped_simplex(y, count, cap);
    }

    let floors = ConstraintSet::CappedSimplexWithFloors {
        count,
        cap,
        subsets: subsets.to_vec(),
    };

    let mut u = y.clone();
    let mut p = Vector::zeros(n);
    let mut q = Vector::zeros(n);
    for _ in 0..MAX_SWEEPS {
        let step = project_capped_simplex(&(&u + &p), count, cap)?;
        p += &u - &step;
        let after = project_floors(&(&step + &q), cap, subsets);
        q += &step - &after;
        let moved = (&after - &u).amax();
        u = after;
        if moved <= 1e-13 && floors.violation(&u) <= 1e-9 {
            return Ok(u);
        }
    }
    Err(SolverError::MaxAlternations)
}

/// Projection onto `{u : sum_{i in S_j} u_i >= cap for each j}`. The
/// subsets are disjoint, so each half-space projects independently by
/// spreading the deficit across its members.
fn project_floors(y: &Vector, cap: f64, subsets: &[Vec<usize>]) -> Vector {
    let mut x = y.clone();
    for s in subsets {
        let mass: f64 = s.iter().map(|&i| x[i]).sum();
        if mass < cap {
            let bump = (cap - mass) / s.len() as f64;
            for &i in s {
                x[i] += bump;
            }
        }
    }
    x
}

/// Proximal operator of `t * sum_i w_i |x_i|`: elementwise symmetric
/// soft-thresholding of `y` by `t * w`.
pub fn prox_l1(y: &Vector, t: f64, w: &Vector) -> Result<Vector, SolverError> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(SolverError::BadParameters(format!(
            "threshold scale must be positive and finite, got {t}"
        )));
    }
    if w.len() != y.len() {
        return Err(SolverError::BadParameters(format!(
            "weight vector has length {}, expected {}",
            w.len(),
            y.len()
        )));
    }
    if w.iter().any(|&x| x < 0.0 || !x.is_finite()) {
        return Err(SolverError::BadParameters(String::from(
            "l1 weights must be nonnegative and finite",
        )));
    }
    Ok(Vector::from_iterator(
        y.len(),
        y.iter()
            .zip(w.iter())
            .map(|(&v, &wi)| v.signum() * (v.abs() - t * wi).max(0.0)),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn vec_of(xs: &[f64]) -> Vector {
        Vector::from_row_slice(xs)
    }

    #[test]
    fn feasible_point_projects_to_itself() {
        let y = vec_of(&[0.25, 0.5, 0.25]);
        let x = project_simplex(&y, 1.0);
        assert_relative_eq!((x - y).norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn simplex_projection_clips_to_vertex() {
        let x = project_simplex(&vec_of(&[2.0, 0.0]), 1.0);
        assert_relative_eq!(x[0], 1.0, epsilon = 1e-14);
        assert_relative_eq!(x[1], 0.0, epsilon = 1e-14);
    }

    #[test]
    fn full_budget_capped_simplex_is_a_point() {
        let x = project_capped_simplex(&vec_of(&[-3.0, 9.0, 0.1]), 3, 2.0).unwrap();
        for i in 0..3 {
            assert_relative_eq!(x[i], 2.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn feasible_capped_point_is_fixed() {
        let y = vec_of(&[1.0, 0.0, 0.0]);
        let x = project_capped_simplex(&y, 1, 1.0).unwrap();
        assert_relative_eq!((x - y).norm(), 0.0, epsilon = 1e-13);
    }

    #[test]
    fn capped_simplex_satisfies_kkt() {
        let y = vec_of(&[0.9, -0.3, 0.5, 2.7, 0.2, 0.4, 1.1, -1.0]);
        let x = project_capped_simplex(&y, 3, 1.0).unwrap();
        assert_relative_eq!(x.sum(), 3.0, epsilon = 1e-10);
        assert!(x.min() >= -1e-12 && x.max() <= 1.0 + 1e-12);
        // Interior coordinates share a common shift y_i - x_i.
        let shifts: Vec<f64> = (0..8)
            .filter(|&i| x[i] > 1e-9 && x[i] < 1.0 - 1e-9)
            .map(|i| y[i] - x[i])
            .collect();
        for pair in shifts.windows(2) {
            assert_relative_eq!(pair[0], pair[1], epsilon = 1e-10);
        }
    }

    #[test]
    fn no_subsets_reduces_to_capped_projection() {
        let y = vec_of(&[0.3, -0.2, 1.4, 0.8]);
        let plain = project_capped_simplex(&y, 2, 1.0).unwrap();
        let floored = project_with_subset_floors(&y, 2, 1.0, &[]).unwrap();
        assert_relative_eq!((plain - floored).norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn covering_subset_floor_is_inactive() {
        let y = vec_of(&[0.3, -0.2, 1.4, 0.8]);
        let all: Vec<usize> = (0..4).collect();
        let plain = project_capped_simplex(&y, 2, 1.0).unwrap();
        let floored = project_with_subset_floors(&y, 2, 1.0, &[all]).unwrap();
        assert!((plain - floored).amax() <= 1e-8);
    }

    #[test]
    fn singleton_floors_receive_full_cap() {
        let y = Vector::zeros(6);
        let x = project_with_subset_floors(&y, 2, 1.0, &[vec![0], vec![3]]).unwrap();
        assert_relative_eq!(x[0], 1.0, epsilon = 1e-7);
        assert_relative_eq!(x[3], 1.0, epsilon = 1e-7);
        assert_relative_eq!(x.sum(), 2.0, epsilon = 1e-9);
    }

    #[test]
    fn soft_threshold_matches_hand_values() {
        let x = prox_l1(&vec_of(&[3.0, -0.5]), 1.0, &vec_of(&[1.0, 1.0])).unwrap();
        assert_relative_eq!(x[0], 2.0, epsilon = 1e-14);
        assert_relative_eq!(x[1], 0.0, epsilon = 1e-14);
    }

    #[test]
    fn zero_weights_leave_input_unchanged() {
        let y = vec_of(&[0.7, -2.0, 0.0]);
        let x = prox_l1(&y, 5.0, &Vector::zeros(3)).unwrap();
        assert_relative_eq!((x - y).norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn overlapping_subsets_are_rejected() {
        let y = Vector::zeros(4);
        let out = project_with_subset_floors(&y, 2, 1.0, &[vec![0, 1], vec![1, 2]]);
        assert!(matches!(out, Err(SolverError::BadParameters(_))));
    }

    #[test]
    fn box_projection_clamps() {
        let set = ConstraintSet::Box {
            lower: vec_of(&[0.0, -1.0]),
            upper: vec_of(&[1.0, 1.0]),
        };
        let x = set.project(&vec_of(&[2.0, -3.0])).unwrap();
        assert_relative_eq!(x[0], 1.0, epsilon = 1e-14);
        assert_relative_eq!(x[1], -1.0, epsilon = 1e-14);
        assert_eq!(set.violation(&x), 0.0);
    }
}
