//! Sparse linear algebra used by both scales.
//!
//! Matrices are stored in CSR format with a structurally symmetric pattern.
//! A bandwidth-reducing ordering is computed once per pattern and a direct
//! envelope (skyline) LU factorization is kept around so that it can be
//! re-used for any number of right-hand sides.

mod factor;
mod ordering;
mod sparse;

pub use factor::{factorize, Factorization, PIVOT_TOLERANCE};
pub use ordering::{compute_ordering, Permutation};
pub use sparse::{SparseMatrix, SparsityPattern};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("sparsity pattern is not structurally symmetric: entry ({row}, {col}) has no transpose")]
    NotSymmetric { row: usize, col: usize },

    #[error("row {row} of the sparsity pattern is empty")]
    EmptyRow { row: usize },

    #[error("matrix is singular: pivot {pivot:e} at index {index} is below tolerance")]
    Singular { index: usize, pivot: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid CSR structure: {0}")]
    InvalidStructure(String),
}

/// Infinity norm of a vector.
pub fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}
