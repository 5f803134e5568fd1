//! Crate-wide error type.

use thiserror::Error;

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Error, Debug)]
pub enum Error {
    /// A field evaluation hit a singular configuration (evaluation point on a
    /// conductor segment, coincident with a dipole, or closer than the 1e-14
    /// denominator guard).
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    /// Vector/matrix/grid dimensions do not agree.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// Operator assembly failed; identifies the offending indices.
    #[error("assembly failed at activation {activation}, sensor {sensor}, cell {cell}: {source}")]
    Assembly {
        activation: usize,
        sensor: usize,
        cell: usize,
        source: Box<Error>,
    },

    /// An activation pattern referenced an unknown base activation.
    #[error("unknown activation id {0} in pattern weights")]
    UnknownActivation(usize),

    /// Noise injection requires a nonzero signal.
    #[error("cannot scale noise to an all-zero signal (SNR undefined)")]
    ZeroSignal,

    /// Grids do not cover the same region, so resampling is undefined.
    #[error("grids do not overlap: {0}")]
    NonOverlappingGrids(String),

    /// Requested phantom kind has no generator.
    #[error("unsupported phantom kind: {0}")]
    UnsupportedPhantom(String),

    /// A value failed validation (construction-time invariants).
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Experiment configuration is invalid.
    #[error("config error: {0}")]
    Config(String),

    /// A pipeline stage failed; wraps the underlying error with its stage.
    #[error("stage {stage} failed: {source}")]
    Stage { stage: String, source: Box<Error> },

    /// The system matrix could not be factorized.
    #[error("linear system is not positive definite: {0}")]
    SingularSystem(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    /// A file did not match its expected on-disk format.
    #[error("format error in {path}: {reason}")]
    Format { path: String, reason: String },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code for the CLI: 2 config, 3 numeric, 4 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidArgument(_) => 2,
            Error::Io(_) | Error::Format { .. } | Error::Json(_) => 4,
            Error::Stage { source, .. } => source.exit_code(),
            _ => 3,
        }
    }
}
