//! Analysis and synthesis tools for internally positive linear systems.
//!
//! The crate revolves around systems of the form
//!
//! ```text
//!     dx/dt = (A + diag(D u)) x + B d,      z = C x,
//! ```
//!
//! where `A` is Metzler, `B` and `C` are nonnegative, and the control
//! vector `u` enters through a diagonal perturbation. For such systems the
//! closed-loop H2 and H-infinity norms are convex in `u` and the
//! H-infinity norm is attained at zero frequency, which makes a family of
//! structured design problems (leader selection in consensus networks,
//! combination drug therapy) tractable with first-order methods.
//!
//! Modules:
//!
//! * [`numerics`] - dense linear-algebra kernels: Lyapunov solves, spectral
//!   abscissa, principal singular triplets, and a small dense LP solver.
//! * [`possys`] - the positive-system data type and validity checks.
//! * [`netgraph`] - weighted digraphs, Laplacians, strongly connected
//!   components, and the leader subsets that govern stabilizability.
//! * [`metrics`] - H2 / H-infinity values, gradients, and subgradient
//!   bundles together with the direction-finding linear programs.
//! * [`solvers`] - projections, proximal operators, and the first-order
//!   methods (proximal gradient, subgradient, optimal subgradient descent,
//!   and the MM scheme for nonsmooth regularizers).
//! * [`leadersel`] - leader selection on consensus networks.
//! * [`drugdesign`] - budgeted and sparsity-promoting therapy design.
//!
//! The crate is `no_std`-compatible (with `alloc`) when built without the
//! default `std` feature; wall-clock timings in solve reports then read zero.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod drugdesign;
pub mod leadersel;
pub mod metrics;
pub mod netgraph;
pub mod numerics;
pub mod possys;
pub mod solvers;

/// Dense dynamically sized matrix of `f64` used throughout the crate.
pub type Matrix = nalgebra::DMatrix<f64>;

/// Dense dynamically sized column vector of `f64`.
pub type Vector = nalgebra::DVector<f64>;
