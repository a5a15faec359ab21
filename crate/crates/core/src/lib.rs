//! Spurious-mode-free eigensolver for 3-D closed cavity resonators filled
//! with electrically and magnetically lossy, anisotropic media.
//!
//! The library discretizes the source-free Maxwell eigenproblem with the
//! lowest-order edge elements coupled to a linear nodal multiplier space.
//! A dummy scalar unknown enforces the divergence-free condition weakly,
//! which removes the spurious dc cluster that plain curl-curl
//! discretizations produce. Both the electric-field and the magnetic-field
//! formulation are available, together with the unconstrained curl-curl
//! system for demonstrating the spurious modes it admits.
//!
//! The crate is `no_std` (with `alloc`): all compute kernels, the sparse
//! LU factorization, the restarted Arnoldi eigensolver and the dense QZ
//! oracle are self-contained. File IO, the CLI and on-disk formats live in
//! the companion `cavity-eig` crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

#[cfg(any(test, feature = "std"))]
extern crate std;

pub mod analysis;
pub mod assembly;
pub mod dense;
pub mod eigen;
pub mod fem;
pub mod lu;
pub mod mesh;
pub mod sparse;

pub use num_complex::Complex64;

/// Vacuum permittivity in F/m (CODATA).
pub const EPSILON_0: f64 = 8.854_187_812_8e-12;
/// Vacuum permeability in H/m (CODATA).
pub const MU_0: f64 = 1.256_637_062_12e-6;
