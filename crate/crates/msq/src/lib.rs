//! Memoryless scalar quantization (MSQ) for random frames and compressed sensing.
//!
//! The library covers the full pipeline for studying how the uniform scalar
//! quantizer interacts with random measurement ensembles:
//!
//! - [`quantizer`]: the uniform scalar quantizer `q_delta`, its vector
//!   extension, and the residual map.
//! - [`ensembles`]: seeded generation of Gaussian, Bernoulli, sphere-row, and
//!   partial-DFT measurement matrices.
//! - [`linalg`]: SVD-based pseudoinverse and singular-value extraction for
//!   real and complex frames.
//! - [`recon`]: quantize-then-linearly-reconstruct and its error.
//! - [`bounds`]: closed-form error bounds and predicted curves (white-noise
//!   hypothesis prediction, concentration bands, the bias-term cap).
//! - [`mu`]: the bias term `mu` computed three ways (Gaussian closed form,
//!   Schwartz-density series, Monte Carlo) plus a Poisson-summation self-check.
//! - [`cs`]: constrained basis-pursuit decoding and the two-stage
//!   compressed-sensing reconstruction.
//! - [`harness`]: declarative experiment runner with seeded parallel trials
//!   and CSV/JSON emission, backing the `msq` command-line tool.
//!
//! Everything is deterministic given a master seed; see [`seeding`] for the
//! substream convention.

pub mod bounds;
pub mod cs;
pub mod ensembles;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod mu;
pub mod quantizer;
pub mod recon;
pub mod seeding;

pub use error::{Error, Result};
pub use quantizer::QuantizerConfig;
