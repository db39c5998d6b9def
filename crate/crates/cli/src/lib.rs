//! File formats, report rendering and the noise-sweep experiment harness
//! behind the `cphom` binary.

pub mod experiment;
pub mod formats;
pub mod report;

use cphom::CpdError;

/// Process exit codes used by the binary.
pub mod exit_codes {
    pub const OK: u8 = 0;
    /// I/O, parse or shape errors.
    pub const INVALID_INPUT: u8 = 1;
    /// The solver found fewer real solutions than factor columns needed, or
    /// could not invert the coordinate matrix.
    pub const DECOMPOSITION_FAILED: u8 = 2;
    /// Requested rank outside the solvable regime.
    pub const OUT_OF_REGIME: u8 = 3;
    /// `verify` relative error above the tolerance.
    pub const VERIFY_FAILED: u8 = 4;
}

/// Map solver errors onto process exit codes.
pub fn exit_code_for(err: &CpdError) -> u8 {
    match err {
        CpdError::OutOfRegime { .. } | CpdError::UnderdeterminedRank { .. } => {
            exit_codes::OUT_OF_REGIME
        }
        CpdError::InsufficientRealSolutions { .. } | CpdError::IllConditionedW { .. } => {
            exit_codes::DECOMPOSITION_FAILED
        }
        _ => exit_codes::INVALID_INPUT,
    }
}
