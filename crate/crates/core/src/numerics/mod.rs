//! Dense real/complex linear algebra and random sampling.

pub mod eig;
pub mod linsolve;
pub mod matrix;
pub mod random;
pub mod scalar;

pub use eig::{eig_herm_max, eig_sym_max, eigh, gen_eig_max, EigPair, Eigh};
pub use linsolve::{cholesky, cholesky_solve, hpd_inverse, pinv, pinv_full_rank, svd, Svd};
pub use matrix::{vecops, CMatrix, Mat, RMatrix};
pub use random::{sample_cgauss, sample_unit_phases};
pub use scalar::Scalar;

pub use num_complex::Complex64;
