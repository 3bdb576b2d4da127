//! Dense symmetric linear algebra and sphere geometry.
//!
//! Everything here works on small dense matrices (dimension up to a few
//! hundred). Values are immutable once built and every routine is pure.

mod dense;
mod eigen;
mod project;
mod sym;
mod unit;

pub use dense::Dense;
pub use eigen::{
    max_eigenvalue, min_eigenvalue, operator_norm, sym_eigendecompose, sym_eigendecompose_with,
    EigenDecomposition, JacobiOptions,
};
pub use project::{project_orthogonal, OrthogonalProjector};
pub use sym::SymMatrix;
pub use unit::UnitVector;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericsError {
    #[error("matrix or vector contains a non-finite entry")]
    NonFinite,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimMismatch { expected: usize, found: usize },
    #[error("matrix is not symmetric at ({row}, {col})")]
    NotSymmetric { row: usize, col: usize },
    #[error("cannot normalize a zero vector")]
    ZeroVector,
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("dimension must be positive")]
    EmptyDimension,
    #[error("Jacobi iteration did not converge after {sweeps} sweeps")]
    NoConvergence { sweeps: usize },
}

pub type Result<T> = std::result::Result<T, NumericsError>;

/// Euclidean inner product.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Angle between two nonzero vectors, in `[0, π]`.
pub fn angle_between(a: &[f64], b: &[f64]) -> f64 {
    let c = dot(a, b) / (norm2(a) * norm2(b));
    c.clamp(-1.0, 1.0).acos()
}
