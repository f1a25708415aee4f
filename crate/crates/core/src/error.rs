use thiserror::Error;

/// Error type shared by all solver modules.
#[derive(Debug, Error)]
pub enum CoreError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("out of domain: component {component} at grid point {index} has value {value}")]
    OutOfDomain {
        component: usize,
        index: usize,
        value: f64,
    },

    #[error("entropy derivative evaluated at nonpositive argument {0}")]
    EntropyDomain(f64),

    #[error("mobility validation failed: {0}")]
    MobilityInvalid(String),

    #[error("constraint violated: {0}")]
    ConstraintViolation(String),

    #[error("singular system at degree {degree} (condition estimate {rcond:.3e})")]
    SingularSystem { degree: usize, rcond: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("embedding failure: radial function nonpositive (min r = {min_r:.6e})")]
    EmbeddingInvalid { min_r: f64 },
}

pub type Result<T> = std::result::Result<T, CoreError>;
