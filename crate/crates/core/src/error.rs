//! Error types shared across the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Every failure mode a pipeline can hit, from axis construction to training.
#[derive(Debug, Error)]
pub enum Error {
    // -- axis / spectrum / cube ------------------------------------------
    #[error("axis span is not positive: start {start} cm^-1, end {end} cm^-1")]
    NonPositiveSpan { start: f64, end: f64 },
    #[error("axis needs at least 2 points, got {0}")]
    TooFewPoints(usize),
    #[error("axis points must be strictly increasing (violated at index {0})")]
    NotMonotonic(usize),
    #[error("uniform index arithmetic requested on an explicit-point (trimmed) axis")]
    NonUniformAxis,
    #[error("index {index} out of axis bounds (n_points {n_points})")]
    IndexOutOfBounds { index: usize, n_points: usize },
    #[error("non-finite value at index {0}")]
    NonFiniteValue(usize),
    #[error("value count {values} does not match axis length {axis}")]
    LengthMismatch { values: usize, axis: usize },
    #[error("band [{lo}, {hi}] cm^-1 contains no axis points")]
    EmptyBand { lo: f64, hi: f64 },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed metadata: {0}")]
    Meta(#[from] serde_json::Error),
    #[error("unsupported cube format version {found} (expected {expected})")]
    FormatVersionMismatch { found: u32, expected: u32 },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    // -- synthgen ---------------------------------------------------------
    #[error("peak model invalid: {0}")]
    PeakOutOfRange(String),
    #[error("foreground layout does not fit the grid: {0}")]
    LayoutOverflow(String),

    // -- prep -------------------------------------------------------------
    #[error("degenerate distribution: {0}")]
    DegenerateDistribution(String),
    #[error("mask has no background pixels")]
    NoBackgroundPixels,
    #[error("mask has no foreground pixels")]
    NoForegroundPixels,
    #[error("no points remain after trimming")]
    EmptyAfterTrim,

    // -- transform ----------------------------------------------------------
    #[error("degenerate spectrum: standard deviation is zero")]
    DegenerateSpectrum,
    #[error("normalization stats missing: {0}")]
    MissingStats(String),
    #[error("degenerate range: min {min} is not below max {max}")]
    DegenerateRange { min: f64, max: f64 },
    #[error("domain tag mismatch: expected {expected}, found {found}")]
    DomainTagMismatch { expected: String, found: String },

    // -- dsp ----------------------------------------------------------------
    #[error("invalid filter parameters: {0}")]
    InvalidParams(String),
    #[error("hyperparameter search space is empty")]
    EmptySpace,

    // -- neural ---------------------------------------------------------------
    #[error("model fingerprint does not match config (expected {expected}, found {found})")]
    ConfigFingerprintMismatch { expected: String, found: String },
    #[error("computation graph already consumed by backward()")]
    GraphConsumed,
    #[error("dataset is empty")]
    EmptyDataset,

    // -- evalbench ---------------------------------------------------------
    #[error("zero vector has no spectral angle")]
    ZeroVector,
    #[error("variance is zero; correlation undefined")]
    DegenerateVariance,
    #[error("no matched peak pairs")]
    NoMatches,
    #[error("baseline error is zero; reduction undefined")]
    ZeroBaselineError,
    #[error("leave-one-sample-out needs at least 2 samples, got {0}")]
    TooFewSamples(usize),
}
