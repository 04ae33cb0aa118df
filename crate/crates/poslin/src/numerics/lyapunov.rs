//! Continuous-time Lyapunov equations via Schur reduction and blockwise
//! back-substitution.

use super::{
    ensure_finite, ensure_square, quasi_triangular_abscissa, schur_decompose, NumericsError,
    HURWITZ_TOL,
};
use crate::Matrix;
use alloc::format;
use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
#[allow(unused_imports)]
use nalgebra::{ComplexField as _, RealField as _};

/// Solves `A X + X A^T + Q = 0` for `X`.
///
/// `A` must be Hurwitz (spectral abscissa below `-1e-12`), otherwise
/// `NonHurwitz` is returned; the equation then has a unique solution. `Q` is
/// arbitrary (not required to be symmetric), but when `Q` is symmetric
/// positive semidefinite the solution is the controllability Gramian of
/// `(A, Q^{1/2})`.
pub fn solve_lyapunov(a: &Matrix, q: &Matrix) -> Result<Matrix, NumericsError> {
    ensure_square(a, "solve_lyapunov: A")?;
    ensure_square(q, "solve_lyapunov: Q")?;
    if a.nrows() != q.nrows() {
        return Err(NumericsError::DimensionMismatch(format!(
            "solve_lyapunov: A is {}x{} but Q is {}x{}",
            a.nrows(),
            a.ncols(),
            q.nrows(),
            q.ncols()
        )));
    }
    ensure_finite(a)?;
    ensure_finite(q)?;
    let n = a.nrows();
    if n == 0 {
        return Ok(Matrix::zeros(0, 0));
    }

    let (u, t) = schur_decompose(a)?;
    let abscissa = quasi_triangular_abscissa(&t);
    if abscissa >= -HURWITZ_TOL {
        return Err(NumericsError::NonHurwitz { abscissa });
    }

    let rhs = -(u.transpose() * q * &u);
    let y = solve_quasi_triangular_lyapunov(&t, &rhs)?;
    Ok(&u * y * u.transpose())
}

/// Solves `T Y + Y T^T = C` where `T` is real quasi upper triangular.
fn solve_quasi_triangular_lyapunov(t: &Matrix, c: &Matrix) -> Result<Matrix, NumericsError> {
    let n = t.nrows();
    let blocks = diagonal_blocks(t);
    let mut y = Matrix::zeros(n, n);

    for &(j0, nj) in blocks.iter().rev() {
        for &(i0, ni) in blocks.iter().rev() {
            // C_ij minus the contributions of already-solved blocks below
            // (row blocks k > i) and to the right (column blocks l > j).
            let mut rhs = c.view((i0, j0), (ni, nj)).clone_owned();
            let itail = i0 + ni;
            let jtail = j0 + nj;
            if itail < n {
                rhs -= t.view((i0, itail), (ni, n - itail)) * y.view((itail, j0), (n - itail, nj));
            }
            if jtail < n {
                rhs -= y.view((i0, jtail), (ni, n - jtail))
                    * t.view((j0, jtail), (nj, n - jtail)).transpose();
            }

            // (I (x) T_ii + T_jj (x) I) vec(Y_ij) = vec(rhs), column-major vec.
            let tii = t.view((i0, i0), (ni, ni));
            let tjj = t.view((j0, j0), (nj, nj));
            let m = ni * nj;
            let mut small = Matrix::zeros(m, m);
            for q in 0..nj {
                for p in 0..ni {
                    let row = p + q * ni;
                    for pp in 0..ni {
                        small[(row, pp + q * ni)] += tii[(p, pp)];
                    }
                    for qq in 0..nj {
                        small[(row, p + qq * ni)] += tjj[(q, qq)];
                    }
                }
            }
            let mut b = crate::Vector::zeros(m);
            for q in 0..nj {
                for p in 0..ni {
                    b[p + q * ni] = rhs[(p, q)];
                }
            }
            let sol = small.lu().solve(&b).ok_or(NumericsError::NumericalBreakdown(
                "singular diagonal block pair in Lyapunov back-substitution",
            ))?;
            for q in 0..nj {
                for p in 0..ni {
                    y[(i0 + p, j0 + q)] = sol[p + q * ni];
                }
            }
        }
    }
    Ok(y)
}

/// Partition of a quasi-triangular matrix into 1x1 and 2x2 diagonal blocks,
/// returned as `(start, size)` pairs.
fn diagonal_blocks(t: &Matrix) -> Vec<(usize, usize)> {
    let n = t.nrows();
    let mut blocks = Vec::new();
    let mut k = 0;
    while k < n {
        if k + 1 < n && t[(k + 1, k)] != 0.0 {
            blocks.push((k, 2));
            k += 2;
        } else {
            blocks.push((k, 1));
            k += 1;
        }
    }
    blocks
}
