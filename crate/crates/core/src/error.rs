//! Error taxonomy shared by every module.
//!
//! The variants mirror the failure classes of the numerical pipeline:
//! invalid mathematical input (`Domain`), an operation invoked outside its
//! contract (`Precondition`), floating-point range exhaustion (`Overflow`),
//! a factorization that lost all pivots (`Conditioning`), an iteration that
//! stopped making progress (`Stagnation`), and mesh/IO resource failures
//! (`Resource`).

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Input outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Operation called outside its stated precondition.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A quantity left the representable floating-point range.
    /// `index` identifies the offending cascade level or mesh node.
    #[error("overflow at index {index}: {message}")]
    Overflow { index: usize, message: String },

    /// Direct factorization met a (near-)zero pivot.
    #[error("ill-conditioned system: smallest pivot {smallest_pivot:.3e}")]
    Conditioning { smallest_pivot: f64 },

    /// Damped iteration failed to reduce the residual.
    #[error("iteration stagnated: {0}")]
    Stagnation(String),

    /// Mesh generation or other resource acquisition failed.
    #[error("resource error: {0}")]
    Resource(String),
}

pub type Result<T> = std::result::Result<T, Error>;
