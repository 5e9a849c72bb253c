use thiserror::Error;

/// Everything that can go wrong in the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum LevyError {
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    /// A parameter violated its contract. `key` names the offending
    /// parameter, using the config key path where one exists.
    #[error("invalid parameter `{key}`: {message}")]
    InvalidParameter { key: String, message: String },

    #[error("the cutoff interval contains every jump (rate of big jumps is zero)")]
    ZeroBigJumpRate,

    #[error("quadrature failed to converge on [{lo}, {hi}]")]
    Quadrature { lo: f64, hi: f64 },

    #[error("no exit before the time cap {cap}")]
    HorizonExceeded { cap: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("empty sample: {0}")]
    EmptySample(String),
}

impl LevyError {
    pub fn param(key: impl Into<String>, message: impl Into<String>) -> Self {
        LevyError::InvalidParameter {
            key: key.into(),
            message: message.into(),
        }
    }

    /// True for errors caused by bad input rather than by the numerics.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            LevyError::InvalidMeasure(_)
                | LevyError::InvalidParameter { .. }
                | LevyError::ZeroBigJumpRate
                | LevyError::Unsupported(_)
        )
    }
}

pub type Result<T, E = LevyError> = std::result::Result<T, E>;
