//! Crate-wide error type.
//!
//! Every fallible operation returns [`Result`]. Variants map onto the CLI
//! exit-code contract: configuration/usage problems surface before these
//! errors are ever produced, so everything here is a numeric or domain
//! failure.

use thiserror::Error;

/// Errors produced by the numerical laboratory.
#[derive(Debug, Error)]
pub enum Error {
    /// An input point or operand lies outside the domain an operation is
    /// defined on (off-manifold point, chart exit, non-SPD metric, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// A stated precondition of the operation does not hold for the inputs.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// An ODE integration failed (step-size underflow, constraint drift).
    #[error("integration error: {0}")]
    Integration(String),

    /// A trajectory left every bounded region; no limit can exist.
    #[error("divergence: {0}")]
    Divergence(String),

    /// An iterative solver failed to converge.
    #[error("solver error: {0}")]
    Solver(String),

    /// A regression/fit could not be computed (too few usable samples).
    #[error("fit error: {0}")]
    Fit(String),

    /// The hypothesis of a conditional statement is violated by the data,
    /// so its conclusion is not checked.
    #[error("hypothesis error: {0}")]
    Hypothesis(String),

    /// Refusal: the requested certificate is known not to hold in the
    /// requested regime, so the check is declined rather than failed.
    #[error("refused: {0}")]
    Refusal(String),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
