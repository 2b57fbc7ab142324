//! Dense complex linear algebra for coin-space operators.

mod eigen;
mod matrix;

pub use eigen::{hermitian_eig, psd_sqrt, unitary_propagator, EigenSystem, HERMITIAN_TOL, MAX_SWEEPS};
pub use matrix::{frobenius_norm, ComplexMatrix, ONE, ZERO};
pub use num_complex::Complex64;
