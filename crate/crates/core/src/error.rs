use thiserror::Error;

/// Errors surfaced by the cell library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum CoreError {
    /// A caller broke an operation precondition (shape mismatch, invalid
    /// configuration, out-of-range hyperparameter, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    /// A non-finite value was produced; `step` is the offending timestep.
    #[error("non-finite value at timestep {step}")]
    NumericFault { step: usize },
}

impl CoreError {
    pub fn contract(msg: impl Into<String>) -> Self {
        CoreError::Contract(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, CoreError>;
