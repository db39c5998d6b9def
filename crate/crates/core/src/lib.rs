//! CP (CANDECOMP/PARAFAC) decomposition of unbalanced real tensors by
//! polynomial homotopy continuation.
//!
//! A third- or fourth-order tensor whose last dimension is at least its rank
//! can be decomposed by reducing the problem to a square polynomial system:
//! matricize the tensor, take a truncated-SVD rank factorization `T = E Fᵀ`,
//! read bilinear (or trilinear) constraints off a nullspace basis of `Eᵀ`,
//! and solve the resulting square system with a multi-homogeneous homotopy.
//! The real isolated solutions with the smallest dropped-equation residuals
//! are stacked into the leading factor matrices and the last factor is
//! recovered by a linear solve.
//!
//! Module map:
//! - [`tensor`]: dense tensors, outer/Khatri-Rao/Kronecker products,
//!   matricization, CP model evaluation.
//! - [`rankfact`]: truncated-SVD rank factorization and the orthonormal
//!   nullspace basis of `Eᵀ`.
//! - [`polysys`]: the square polynomial system, its Jacobian and the
//!   dropped-equation residual.
//! - [`homotopy`]: linear-product start systems, Bézout counts and
//!   predictor-corrector path tracking.
//! - [`pipeline`]: the end-to-end decomposition driver, synthetic problem
//!   generation and factor matching.

pub mod error;
pub mod homotopy;
pub mod pipeline;
pub mod polysys;
pub mod rankfact;
pub mod tensor;
pub mod testdata;

mod seeding;

pub use nalgebra;
pub use num_complex;

pub use error::CpdError;
pub use homotopy::{PathResult, PathStatus, StartSystem, TrackerConfig};
pub use pipeline::{DecomposeRequest, DecompositionReport, PathStats, RankSpec};
pub use polysys::{EvalPoint, PolySystem};
pub use rankfact::{NullspaceBasis, RankFactorization};
pub use tensor::{DenseTensor, FactorSet, Matricization};

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, CpdError>;
