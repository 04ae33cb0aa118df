//! Dense linear-algebra kernels shared by the rest of the crate.
//!
//! Orthogonal reductions (Schur, symmetric eigendecompositions) are
//! delegated to `nalgebra`; the Lyapunov back-substitution, the principal
//! singular triplet refinement, and the simplex solver are implemented
//! here.

mod lp;
mod lyapunov;
mod svd;

pub use lp::{solve_lp, LpOutcome, LpProblem, LpSolution};
pub use lyapunov::solve_lyapunov;
pub use svd::{principal_svd, SvdTriplet};

use crate::Matrix;
use alloc::format;
use alloc::string::String;

#[cfg(not(feature = "std"))]
#[allow(unused_imports)]
use nalgebra::{ComplexField as _, RealField as _};

/// Errors reported by the numeric kernels.
#[derive(Debug, Clone, PartialEq)]
pub enum NumericsError {
    /// Operand shapes are inconsistent with the operation.
    DimensionMismatch(String),
    /// A matrix required to be Hurwitz has spectral abscissa `>= -1e-12`.
    NonHurwitz { abscissa: f64 },
    /// An input contains NaN or infinite entries.
    NonFinite,
    /// A matrix required to be invertible (or positive definite) is not.
    Singular,
    /// An iterative kernel failed to converge or lost all precision.
    NumericalBreakdown(&'static str),
}

impl core::fmt::Display for NumericsError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            NumericsError::DimensionMismatch(what) => write!(f, "dimension mismatch: {what}"),
            NumericsError::NonHurwitz { abscissa } => {
                write!(f, "matrix is not Hurwitz (spectral abscissa {abscissa:e})")
            }
            NumericsError::NonFinite => write!(f, "input contains non-finite entries"),
            NumericsError::Singular => write!(f, "matrix is singular or not positive definite"),
            NumericsError::NumericalBreakdown(what) => write!(f, "numerical breakdown: {what}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for NumericsError {}

/// Spectral abscissa tolerance: a matrix counts as Hurwitz only when its
/// spectral abscissa is strictly below `-HURWITZ_TOL`.
pub const HURWITZ_TOL: f64 = 1e-12;

pub(crate) fn ensure_finite(m: &Matrix) -> Result<(), NumericsError> {
    if m.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(NumericsError::NonFinite)
    }
}

pub(crate) fn ensure_square(m: &Matrix, what: &str) -> Result<(), NumericsError> {
    if m.nrows() == m.ncols() {
        Ok(())
    } else {
        Err(NumericsError::DimensionMismatch(format!(
            "{what}: expected a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )))
    }
}

/// Computes the real Schur form of `a`, returning `(Q, T)` with `A = Q T Q^T`.
pub(crate) fn schur_decompose(a: &Matrix) -> Result<(Matrix, Matrix), NumericsError> {
    let schur = nalgebra::linalg::Schur::try_new(a.clone(), f64::EPSILON, 0)
        .ok_or(NumericsError::NumericalBreakdown("Schur iteration failed"))?;
    Ok(schur.unpack())
}

/// Largest real part among the eigenvalues of a real quasi-triangular matrix.
pub(crate) fn quasi_triangular_abscissa(t: &Matrix) -> f64 {
    let n = t.nrows();
    let mut alpha = f64::NEG_INFINITY;
    let mut k = 0;
    while k < n {
        if k + 1 < n && t[(k + 1, k)] != 0.0 {
            let tr = t[(k, k)] + t[(k + 1, k + 1)];
            let det = t[(k, k)] * t[(k + 1, k + 1)] - t[(k, k + 1)] * t[(k + 1, k)];
            let disc = tr * tr / 4.0 - det;
            let re_max = if disc > 0.0 {
                tr / 2.0 + disc.sqrt()
            } else {
                tr / 2.0
            };
            alpha = alpha.max(re_max);
            k += 2;
        } else {
            alpha = alpha.max(t[(k, k)]);
            k += 1;
        }
    }
    alpha
}

/// Largest real part of the eigenvalues of a square matrix.
///
/// Returns `DimensionMismatch` for non-square input and `NonFinite` when the
/// matrix contains NaN or infinities. The empty matrix has abscissa `-inf`.
pub fn spectral_abscissa(a: &Matrix) -> Result<f64, NumericsError> {
    ensure_square(a, "spectral_abscissa")?;
    ensure_finite(a)?;
    if a.nrows() == 0 {
        return Ok(f64::NEG_INFINITY);
    }
    let (_, t) = schur_decompose(a)?;
    Ok(quasi_triangular_abscissa(&t))
}

/// True when `a` is Hurwitz under the crate-wide abscissa tolerance.
pub fn is_hurwitz(a: &Matrix) -> Result<bool, NumericsError> {
    Ok(spectral_abscissa(a)? < -HURWITZ_TOL)
}
