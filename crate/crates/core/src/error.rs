use thiserror::Error;

/// Errors raised by the channel model, optimizers and experiment drivers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum FimError {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("path bundle needs at least one inbound path")]
    EmptyInbound,

    #[error("path bundle needs at least one outbound path")]
    EmptyOutbound,

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("deformation {value} at element {index} exceeds bound {d_max}")]
    DeformationOutOfBounds { index: usize, value: f64, d_max: f64 },

    #[error("element index {index} out of range for {len} elements")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("inbound path {0} has no BS departure angle")]
    MissingBsDeparture(usize),

    #[error("antenna count must be at least 1")]
    ZeroAntennas,

    #[error("unsupported input: {0}")]
    Unsupported(String),

    #[error("degenerate scenario: {0}")]
    Degenerate(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, FimError>;
