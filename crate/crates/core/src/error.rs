use thiserror::Error;

/// Errors raised by tensor-network operations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: axis {axis_a} of left operand has extent {extent_a}, axis {axis_b} of right operand has extent {extent_b}")]
    AxisMismatch {
        axis_a: usize,
        extent_a: usize,
        axis_b: usize,
        extent_b: usize,
    },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid axes: {0}")]
    Axes(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("dense materialization of {entries} entries exceeds the cap of {cap}")]
    DenseCap { entries: u128, cap: usize },

    #[error("unsupported format version `{0}`")]
    Version(String),

    #[error("malformed file: {0}")]
    Format(String),

    #[error("checksum mismatch: stored {stored:#018x}, computed {computed:#018x}")]
    Checksum { stored: u64, computed: u64 },

    #[error("linear algebra failure: {0}")]
    Linalg(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
