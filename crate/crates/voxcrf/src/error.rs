//! Error type shared by all voxcrf modules.

use thiserror::Error;

/// Errors produced by volume construction, file I/O, kernel building and inference.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter violates its documented domain (negative radius, zero bandwidth, ...).
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Two inputs that must share dims or label count do not.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A sample that must be finite is NaN or infinite.
    #[error("non-finite value: {0}")]
    NonFinite(String),

    /// A label value is outside `[0, num_labels)`.
    #[error("label value {value} out of range for {num_labels} labels")]
    LabelOutOfRange { value: u8, num_labels: usize },

    /// Raw payload length does not match the header's voxel count.
    #[error("payload length mismatch: expected {expected} bytes, found {actual}")]
    PayloadLength { expected: usize, actual: usize },

    /// Volume header missing or not parseable.
    #[error("malformed header: {0}")]
    MalformedHeader(String),

    /// The kernel is only defined for distinct sites (j != i).
    #[error("kernel evaluated at zero spatial offset")]
    ZeroOffset,

    /// Exact enumeration refused: the configuration space is too large.
    #[error("enumeration refused: {num_labels}^{num_voxels} configurations exceed the limit of {limit}")]
    EnumerationTooLarge {
        num_labels: usize,
        num_voxels: usize,
        limit: usize,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
