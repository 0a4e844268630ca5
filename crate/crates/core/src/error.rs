//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by the analysis routines.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation
    /// (e.g. a radius outside the annulus, an empty field).
    #[error("domain error: {0}")]
    Domain(String),

    /// A stated precondition of a lemma or construction is violated
    /// (e.g. nonzero flux where zero flux is required, 2r >= R).
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// Two gridded operands do not share the same grid.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// A numerical solve failed to reach its tolerance.
    #[error("solver error: {0}")]
    Solver(String),

    /// The requested expansion is degenerate (no leading term can be isolated).
    #[error("degenerate expansion: {0}")]
    DegenerateExpansion(String),

    /// A geometric configuration is invalid (overlapping disks, contour
    /// through a pole, parity violation, ...).
    #[error("invalid configuration: {0}")]
    InvalidConfiguration(String),
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
