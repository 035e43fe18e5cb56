//! Crate-wide error type.

use thiserror::Error;

/// Errors raised anywhere in the pipeline.
///
/// File-format problems are split into distinct variants (version,
/// truncation, checksum) so callers can tell a stale file from a
/// corrupted one.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration or argument values.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// Scene geometry violates an invariant (point inside a building,
    /// degenerate footprint, infeasible probe, ...).
    #[error("invalid geometry: {0}")]
    Geometry(String),

    /// A sample location lies inside a building footprint.
    #[error("location ({x:.3}, {y:.3}) lies inside a building footprint")]
    BlockedLocation { x: f64, y: f64 },

    /// Tensor or layer dimensions do not agree.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// A value that must be finite is NaN or infinite.
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    /// Underlying I/O failure.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// File carries the wrong magic bytes for this format.
    #[error("unrecognized file format (bad magic bytes)")]
    BadMagic,

    /// File format version is not supported by this build.
    #[error("unsupported format version {found} (expected {expected})")]
    FormatVersion { found: u32, expected: u32 },

    /// File ended before a complete record could be read.
    #[error("truncated file while reading {0}")]
    Truncated(&'static str),

    /// Stored checksum does not match the payload.
    #[error("checksum mismatch in section `{0}`")]
    ChecksumMismatch(String),

    /// Training produced a non-finite loss.
    #[error(
        "training diverged at epoch {epoch}, batch {batch}: loss = {loss}, \
         parameter norm = {param_norm:.6e}"
    )]
    Divergence {
        epoch: usize,
        batch: usize,
        loss: f64,
        param_norm: f64,
    },

    /// Artifact hash chain does not match the recorded provenance.
    #[error("verification failed: {0}")]
    Verification(String),
}

pub type Result<T> = std::result::Result<T, Error>;
