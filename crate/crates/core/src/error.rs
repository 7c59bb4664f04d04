use thiserror::Error;

/// Errors raised when a model input violates its domain invariants.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid ionization spectrum: {0}")]
    InvalidSpectrum(String),

    #[error("invalid probability {value} for step {}: not in [0, 1]", .index + 1)]
    InvalidProbability { index: usize, value: f64 },

    #[error("invalid step count {0}: at least one step is required")]
    InvalidStepCount(u32),

    #[error("invalid device: {0}")]
    InvalidDevice(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{value} is outside the admissible range [{min}, {max}]")]
    OutOfRange { value: f64, min: f64, max: f64 },

    #[error("outcome space of {required} joint outcomes exceeds the cap of {cap}")]
    StateSpaceTooLarge { required: u128, cap: u64 },

    #[error("invalid gain distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid cascade network: {0}")]
    InvalidNetwork(String),

    #[error("stage index {index} out of range for a {stages}-stage network")]
    IndexOutOfRange { index: usize, stages: usize },

    #[error("length mismatch: {factors} noise factors but {gains} power gains")]
    LengthMismatch { factors: usize, gains: usize },
}

pub type Result<T> = std::result::Result<T, ModelError>;
