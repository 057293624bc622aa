//! Cut-and-project model sets, strongly pattern equivariant operators and
//! the weak-* convergence of their spectral data under periodic
//! approximation.
//!
//! The crate is organised bottom-up:
//!
//! - [`pointset`]: finite Delone patches, Delone checks, the local
//!   (Chabauty-Fell style) distance and patch classes.
//! - [`cutproject`]: schemes, windows and mollified window functions,
//!   model-set enumeration, rational approximants and their periods.
//! - [`pattern`]: pattern equivariant functions and the finite-type kernel
//!   algebra (generators, adjoint, convolution, Schrödinger assembly).
//! - [`operators`]: matrices of kernels on weighted `ℓ²` spaces and the
//!   dense Hermitian eigensolver.
//! - [`spectra`]: empirical measures, periodization, autocorrelation,
//!   density of states and weak-* distances.
//! - [`harness`]: the double-limit convergence experiments.
//! - [`algebra_check`]: the randomized kernel-algebra invariant suite.

pub mod algebra_check;
pub mod cutproject;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod operators;
pub mod pattern;
pub mod pointset;
pub mod spectra;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Tolerance under which two points are considered identical.
pub const COINCIDENCE_TOL: f64 = 1e-9;

/// Grid used to round displacement vectors in patch signatures.
pub const CLASS_GRID: f64 = 1e-6;
