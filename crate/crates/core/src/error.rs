//! Error type shared across the decomposition pipeline.

use thiserror::Error;

/// Everything that can go wrong while building or solving a decomposition.
#[derive(Debug, Clone, Error)]
pub enum CpdError {
    /// Inconsistent dimensions, empty inputs, mismatched column counts.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Tensor order outside the supported range for this operation.
    #[error("unsupported tensor order {order}; expected one of {expected}")]
    UnsupportedOrder { order: usize, expected: &'static str },

    /// The matrix to factorize is numerically zero.
    #[error("matrix has numerical rank zero; nothing to factorize")]
    RankZero,

    /// `rows(E) == R`, so `N(Eᵀ)` is trivial and no polynomial system exists.
    #[error("nullspace of Eᵀ is empty (rows = rank = {rank}); no equations to build")]
    EmptyNullspace { rank: usize },

    /// Requested rank exceeds the critical rank; the constraint system would
    /// be underdetermined and the decomposition non-unique.
    #[error("rank {rank} exceeds the critical rank {critical}; system is underdetermined")]
    UnderdeterminedRank { rank: usize, critical: usize },

    /// Requested rank is outside `1 ..= min(last dim, critical rank)`.
    #[error("rank {rank} outside the solvable regime (last dim {last_dim}, critical rank {critical})")]
    OutOfRegime {
        rank: usize,
        last_dim: usize,
        critical: usize,
    },

    /// Fewer real isolated solutions were found than factor columns needed.
    #[error("only {found} real solutions found, need {needed}")]
    InsufficientRealSolutions { found: usize, needed: usize },

    /// The coordinate matrix W is too ill-conditioned to invert reliably.
    #[error("coordinate matrix W is ill-conditioned (cond = {cond:.3e})")]
    IllConditionedW { cond: f64 },

    /// Random draws repeatedly failed an independence or solvability check.
    #[error("degenerate randomness: {0}")]
    DegenerateRandomness(String),
}

impl CpdError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        CpdError::InvalidInput(msg.into())
    }
}
