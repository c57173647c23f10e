//! Fractional-time calculus in the Marchaud formulation, a weak-in-time
//! parabolic solver with history data, and numerical checks of the
//! integration-by-parts, Steklov-average and cutoff identities that the
//! uniqueness theory for such equations rests on.
//!
//! Every trajectory is piecewise linear in time on a [`TimeGrid`] that covers
//! `[-M, T]`, and every singular integral against `(t - s)^(-1-alpha)` or
//! `(t - s)^(-alpha)` is evaluated cell by cell in closed form by
//! [`KernelQuadrature`]. Spatial vectors live on a P1 finite element
//! discretization of `H^1_0(0, 1)` ([`SpatialMesh`]).

pub mod cutoff;
pub mod error;
pub mod frac_ops;
pub mod grid;
pub mod identity_lab;
pub mod kernel;
pub mod mesh;
pub mod order;
pub mod parabolic;
pub mod quad;
pub mod report;
pub mod special;
pub mod steklov;
pub mod trajectory;

pub use cutoff::{CutoffFn, CutoffKind};
pub use error::{Error, Result};
pub use grid::TimeGrid;
pub use kernel::KernelQuadrature;
pub use mesh::{Euclidean, Pairing, SpatialMesh, Tridiagonal};
pub use order::{FracOrder, Normalization};
pub use report::ResidualReport;
pub use trajectory::Trajectory;
