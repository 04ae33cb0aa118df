//! Principal singular triplet via a symmetric eigensolve on the smaller
//! Gram matrix followed by alternating power refinement.

use super::{ensure_finite, NumericsError};
use crate::{Matrix, Vector};

#[cfg(not(feature = "std"))]
#[allow(unused_imports)]
use nalgebra::{ComplexField as _, RealField as _};

/// Principal singular triplet `(sigma, w, v)` of a matrix `M`, satisfying
/// `M v = sigma w` and `M^T w = sigma v` with unit `w`, `v`.
#[derive(Debug, Clone, PartialEq)]
pub struct SvdTriplet {
    /// Largest singular value, always nonnegative.
    pub sigma: f64,
    /// Unit left singular vector.
    pub left: Vector,
    /// Unit right singular vector.
    pub right: Vector,
}

/// Computes the principal singular triplet of `m`.
///
/// The sign is normalized so that the largest-magnitude entry of the left
/// vector is positive. For an elementwise nonnegative matrix the returned
/// vectors are nonnegative (Perron pair of the Gram matrices).
pub fn principal_svd(m: &Matrix) -> Result<SvdTriplet, NumericsError> {
    ensure_finite(m)?;
    let (rows, cols) = m.shape();
    if rows == 0 || cols == 0 {
        return Err(NumericsError::DimensionMismatch(alloc::format!(
            "principal_svd: matrix is {rows}x{cols}"
        )));
    }

    // Eigensolve the smaller Gram matrix for a high-quality starting vector.
    let (mut w, mut v) = if rows <= cols {
        let w0 = top_eigenvector(&(m * m.transpose()));
        let v0 = normalized_or(m.transpose() * &w0, cols, 0);
        (w0, v0)
    } else {
        let v0 = top_eigenvector(&(m.transpose() * m));
        let w0 = normalized_or(m * &v0, rows, 0);
        (w0, v0)
    };

    let mut sigma = refine(m, &mut w, &mut v);

    if is_nonnegative(m) && (w.min() < -1e-13 || v.min() < -1e-13) {
        // For nonnegative matrices an entrywise absolute value of any
        // maximizing pair is again maximizing; re-refine from it.
        w.apply(|x| *x = x.abs());
        v.apply(|x| *x = x.abs());
        renormalize(&mut w);
        renormalize(&mut v);
        sigma = refine(m, &mut w, &mut v);
    }

    orient(&mut w, &mut v);
    Ok(SvdTriplet {
        sigma,
        left: w,
        right: v,
    })
}

/// Alternating power refinement of the pair; returns the singular value.
fn refine(m: &Matrix, w: &mut Vector, v: &mut Vector) -> f64 {
    let mut sigma = 0.0_f64;
    for _ in 0..200 {
        let mv = m * &*v;
        let nw = mv.norm();
        if nw <= f64::MIN_POSITIVE {
            return 0.0;
        }
        *w = mv / nw;
        let mtw = m.transpose() * &*w;
        let nv = mtw.norm();
        if nv <= f64::MIN_POSITIVE {
            return 0.0;
        }
        *v = mtw / nv;
        if (nv - sigma).abs() <= 1e-15 * nv.max(1.0) {
            return nv;
        }
        sigma = nv;
    }
    sigma
}

/// Unit eigenvector for the largest eigenvalue of a symmetric matrix.
fn top_eigenvector(gram: &Matrix) -> Vector {
    let eig = nalgebra::linalg::SymmetricEigen::new(gram.clone());
    let mut best = 0;
    for i in 1..eig.eigenvalues.len() {
        if eig.eigenvalues[i] > eig.eigenvalues[best] {
            best = i;
        }
    }
    let mut v = eig.eigenvectors.column(best).clone_owned();
    renormalize(&mut v);
    v
}

fn normalized_or(x: Vector, dim: usize, basis: usize) -> Vector {
    let n = x.norm();
    if n <= f64::MIN_POSITIVE {
        let mut e = Vector::zeros(dim);
        e[basis] = 1.0;
        e
    } else {
        x / n
    }
}

fn renormalize(x: &mut Vector) {
    let n = x.norm();
    if n <= f64::MIN_POSITIVE {
        x.fill(0.0);
        x[0] = 1.0;
    } else {
        *x /= n;
    }
}

fn is_nonnegative(m: &Matrix) -> bool {
    m.iter().all(|&x| x >= 0.0)
}

/// Flips the pair so the largest-magnitude entry of the left vector is
/// positive (ties resolved by the first such entry).
fn orient(w: &mut Vector, v: &mut Vector) {
    let mut idx = 0;
    for i in 1..w.len() {
        if w[i].abs() > w[idx].abs() {
            idx = i;
        }
    }
    if w[idx] < 0.0 {
        *w = -&*w;
        *v = -&*v;
    }
}
