//! Internally positive linear systems with diagonal control action.
//!
//! A system bundles the matrices of
//!
//! ```text
//!     dx/dt = (A + diag(D u)) x + B d,      z = C x,
//! ```
//!
//! where `x` is the state, `d` a disturbance, `z` the performance output,
//! and `u` a control vector entering through the diagonal gain
//! `K(u) = diag(D u)`. Internal positivity requires `A` Metzler and `B`,
//! `C` elementwise nonnegative; `D` is unrestricted in sign.

use crate::{Matrix, Vector};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

/// Errors from constructing or evaluating a system.
#[derive(Debug, Clone, PartialEq)]
pub enum PossysError {
    /// Matrix shapes are inconsistent.
    DimensionMismatch(String),
    /// An input contains NaN or infinite entries.
    NonFinite,
}

impl core::fmt::Display for PossysError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            PossysError::DimensionMismatch(what) => write!(f, "dimension mismatch: {what}"),
            PossysError::NonFinite => write!(f, "input contains non-finite entries"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for PossysError {}

/// A single entry violating the positivity assumptions.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    /// Which matrix the entry lives in (`"A"`, `"B"`, or `"C"`).
    pub matrix: &'static str,
    pub row: usize,
    pub col: usize,
    /// The offending (negative) value.
    pub value: f64,
}

impl core::fmt::Display for Violation {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(
            f,
            "{}[{},{}] = {:e} must be nonnegative",
            self.matrix, self.row, self.col, self.value
        )
    }
}

/// State-space data of a positive system; see the module docs for the
/// dynamics.
#[derive(Debug, Clone, PartialEq)]
pub struct PositiveSystem {
    a: Matrix,
    b: Matrix,
    c: Matrix,
    d: Matrix,
}

impl PositiveSystem {
    /// Builds a system from `A` (n x n), `B` (n x p), `C` (q x n), and
    /// `D` (n x m). Shapes and finiteness are enforced here; the sign
    /// assumptions are reported by [`validate`](Self::validate) instead so
    /// that invalid data can be inspected.
    pub fn new(a: Matrix, b: Matrix, c: Matrix, d: Matrix) -> Result<Self, PossysError> {
        let n = a.nrows();
        if n == 0 || a.ncols() != n {
            return Err(PossysError::DimensionMismatch(format!(
                "A must be square and nonempty, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        if b.nrows() != n {
            return Err(PossysError::DimensionMismatch(format!(
                "B must have {n} rows, got {}",
                b.nrows()
            )));
        }
        if c.ncols() != n {
            return Err(PossysError::DimensionMismatch(format!(
                "C must have {n} columns, got {}",
                c.ncols()
            )));
        }
        if d.nrows() != n {
            return Err(PossysError::DimensionMismatch(format!(
                "D must have {n} rows, got {}",
                d.nrows()
            )));
        }
        if b.ncols() == 0 || c.nrows() == 0 || d.ncols() == 0 {
            return Err(PossysError::DimensionMismatch(
                "B, C, and D must each have at least one column / row".into(),
            ));
        }
        for m in [&a, &b, &c, &d] {
            if !m.iter().all(|x| x.is_finite()) {
                return Err(PossysError::NonFinite);
            }
        }
        Ok(PositiveSystem { a, b, c, d })
    }

    /// State dimension `n`.
    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    /// Number of control inputs `m` (columns of `D`).
    pub fn input_dim(&self) -> usize {
        self.d.ncols()
    }

    /// Number of disturbance channels (columns of `B`).
    pub fn disturbance_dim(&self) -> usize {
        self.b.ncols()
    }

    /// Number of performance outputs (rows of `C`).
    pub fn output_dim(&self) -> usize {
        self.c.nrows()
    }

    pub fn a(&self) -> &Matrix {
        &self.a
    }

    pub fn b(&self) -> &Matrix {
        &self.b
    }

    pub fn c(&self) -> &Matrix {
        &self.c
    }

    pub fn d(&self) -> &Matrix {
        &self.d
    }

    /// Lists every entry violating the positivity assumptions: negative
    /// off-diagonal entries of `A` and negative entries of `B` or `C`.
    /// An empty list means the assumptions hold.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let n = self.state_dim();
        for i in 0..n {
            for j in 0..n {
                if i != j && self.a[(i, j)] < 0.0 {
                    out.push(Violation {
                        matrix: "A",
                        row: i,
                        col: j,
                        value: self.a[(i, j)],
                    });
                }
            }
        }
        for (name, m) in [("B", &self.b), ("C", &self.c)] {
            for j in 0..m.ncols() {
                for i in 0..m.nrows() {
                    if m[(i, j)] < 0.0 {
                        out.push(Violation {
                            matrix: name,
                            row: i,
                            col: j,
                            value: m[(i, j)],
                        });
                    }
                }
            }
        }
        out
    }

    /// True when the positivity assumptions hold.
    pub fn is_positive(&self) -> bool {
        self.validate().is_empty()
    }

    /// Closed-loop state matrix `A + diag(D u)`.
    pub fn closed_loop(&self, u: &Vector) -> Result<Matrix, PossysError> {
        if u.len() != self.input_dim() {
            return Err(PossysError::DimensionMismatch(format!(
                "control vector has length {}, expected {}",
                u.len(),
                self.input_dim()
            )));
        }
        if !u.iter().all(|x| x.is_finite()) {
            return Err(PossysError::NonFinite);
        }
        let gains = &self.d * u;
        let mut acl = self.a.clone();
        for i in 0..self.state_dim() {
            acl[(i, i)] += gains[i];
        }
        Ok(acl)
    }

    /// Adjoint of the gain map: `K*(X) = D^T diag(X)`, so that
    /// `<K(u), X> = <u, K*(X)>` for all `u` and square `X`.
    pub fn adjoint_k(&self, x: &Matrix) -> Result<Vector, PossysError> {
        let n = self.state_dim();
        if x.nrows() != n || x.ncols() != n {
            return Err(PossysError::DimensionMismatch(format!(
                "adjoint_k expects an {n}x{n} matrix, got {}x{}",
                x.nrows(),
                x.ncols()
            )));
        }
        let diag = Vector::from_iterator(n, (0..n).map(|i| x[(i, i)]));
        Ok(self.d.transpose() * diag)
    }
}
