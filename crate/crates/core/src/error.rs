//! Error type shared by every module of the crate.

use alloc::string::String;

/// Result alias used across the crate.
pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Everything that can go wrong in the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// The zero wavevector was passed where a nonzero mode is required.
    #[error("the zero mode (0,0) is not a valid mode index")]
    ZeroMode,
    /// A truncation parameter below 1.
    #[error("truncation radius N must be at least 1, got {0}")]
    InvalidTruncation(i64),
    /// Model parameters out of range.
    #[error("invalid model parameters: {0}")]
    InvalidParams(String),
    /// Mode `(k1, k2)` is not present (up to sign) in the truncation.
    #[error("mode ({0},{1}) absent from truncation")]
    ModeAbsent(i32, i32),
    /// `k - h = 0`: the pair does not contribute to the convolution.
    #[error("degenerate interaction pair: k - h = 0")]
    DegeneratePair,
    /// Two objects built on different truncations were combined.
    #[error("truncation mismatch")]
    TruncationMismatch,
    /// A length or shape did not match.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch {
        /// Expected length.
        expected: usize,
        /// Supplied length.
        got: usize,
    },
    /// Implicit-midpoint fixed point did not converge.
    #[error("fixed-point iteration did not converge in {iterations} iterations (residual {residual:e}); reduce dt")]
    NonConvergence {
        /// Iterations performed.
        iterations: usize,
        /// Last sup-norm update size.
        residual: f64,
    },
    /// A NaN or infinity appeared during integration.
    #[error("non-finite state at t = {time}")]
    NonFinite {
        /// Model time at which the state became non-finite.
        time: f64,
    },
    /// A series parameter at or below its convergence threshold.
    #[error("series diverges: alpha = {alpha} must exceed {threshold}")]
    Divergent {
        /// Requested exponent.
        alpha: f64,
        /// Convergence threshold.
        threshold: f64,
    },
    /// Transform grid cannot represent the quadratic product without aliasing.
    #[error("grid of size {n} aliases the quadratic term; need at least {required}")]
    GridTooSmall {
        /// Requested grid size.
        n: usize,
        /// Minimal alias-free size.
        required: usize,
    },
    /// Physical reconstruction was not real: conjugate symmetry is broken.
    #[error("imaginary residue {0:e} exceeds tolerance")]
    SymmetryBroken(f64),
    /// Density evaluation could not reach the requested accuracy.
    #[error("density evaluation inaccurate: {0}")]
    Accuracy(String),
    /// Generic invalid argument.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
