//! Error types shared across the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A scalar input was NaN or infinite where a finite value is required.
    #[error("non-finite input: {0}")]
    NonFinite(f64),

    /// Invalid quantizer step size.
    #[error("quantizer step must be positive and finite, got delta = {0}")]
    InvalidDelta(f64),

    /// A configuration field failed validation.
    #[error("configuration error: {0}")]
    Config(String),

    /// An operation was called on an input that violates its contract.
    #[error("contract violation: {0}")]
    Contract(String),

    /// The matrix is numerically rank-deficient.
    #[error("rank-deficient matrix: sigma_min = {sigma_min:.6e}, sigma_max = {sigma_max:.6e}")]
    RankDeficient { sigma_min: f64, sigma_max: f64 },

    /// Band constants are undefined: lambda must exceed (2 c_K)^2.
    #[error("degenerate band constants: lambda = {lambda} does not exceed (2 c_K)^2 = {threshold}")]
    DegenerateConstants { lambda: f64, threshold: f64 },

    /// A series truncation rule was not met within the term budget.
    #[error("series did not meet the truncation rule within {max_terms} terms")]
    SeriesDiverged { max_terms: usize },

    /// The decoder exhausted its step budget; carries the best iterate found.
    #[error("solver did not converge within {steps} steps (feasibility gap {feasibility_gap:.3e})")]
    SolverStalled {
        steps: usize,
        feasibility_gap: f64,
        best_iterate: Box<[f64]>,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}
