//! Sparse linear algebra for the waveguide mode solver.
//!
//! The crate provides a compressed-row sparse matrix, fill-reducing orderings
//! selected by name from a registry, a multifrontal LU factorization with
//! threshold partial pivoting, and a shift-invert Krylov-Schur eigensolver
//! built on top of it.

pub mod csr;
pub mod error;
pub mod krylov;
pub mod lu;
pub mod ordering;
pub mod scalar;
pub mod schur;
pub mod selftest;

pub use csr::{SparseMatrix, TripletBuilder};
pub use error::SparseError;
pub use krylov::{eigs_shift_invert, eigs_with_factors, EigenConfig, EigenPair, EigenSolution};
pub use lu::{LuFactors, LuStats};
pub use ordering::{FillOrdering, Graph, OrderingRegistry};
pub use scalar::{Scalar, C64};
