//! Classification of quadratic null forms for 2D quasilinear wave equations
//! and a ghost-weighted finite-difference solver with energy diagnostics.
//!
//! The crate has two halves:
//!
//! * [`algebra`] works in exact rational arithmetic: coefficient tensors
//!   g^{kij} of nonlinearities g^{kij}∂_k u ∂_{ij}u, their cone symbols,
//!   null and strong-null condition checkers, and the decomposition of any
//!   null tensor over the standard form basis F^A, F^B, F^C, F^D.
//! * the numerical half solves □u = g^{kij}∂_k u ∂_{ij}u with small
//!   compactly supported data on a uniform grid and monitors ghost-weighted
//!   energies, good-derivative fluxes, and decay rates.
//!
//! Numerical kernels are generic over [`Scalar`]; the `Real` alias fixes the
//! production width used by the binaries.

pub mod algebra;
pub mod exec;
pub mod ghost;
pub mod grid;
pub mod history;
pub mod profiles;
pub mod scalar;
pub mod diag;
pub mod solver;
pub mod stencil;

pub use exec::Workers;
pub use scalar::Scalar;
pub use diag::{DiagError, EnergyReport, Thresholds};
pub use solver::{RunRecord, SolverConfig, SolverError};

/// Scalar type used by the command-line tools and default type aliases.
pub type Real = f64;

/// Grid function at the production scalar width.
pub type RealField = grid::GridFunction<Real>;

/// Time history at the production scalar width.
pub type RealHistory = history::TimeHistory<Real>;
