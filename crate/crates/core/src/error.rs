use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A shuffle specification or deck failed validation.
    #[error("invalid specification: {0}")]
    InvalidSpec(String),

    /// A numeric argument is outside its admissible range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The lower-bound lemma needs `Re(lambda) >= 1/2`.
    #[error("lemma-inapplicable: gamma = {gamma} exceeds 1/2 (Re(lambda) < 1/2)")]
    LemmaInapplicable { gamma: f64 },

    /// Neither the root finder nor the dense fallback produced an acceptable eigenvalue.
    #[error("no-root: {0}")]
    NoRoot(String),

    /// The exact state space is larger than the configured cap.
    #[error("state-space cap exceeded: {states} states > {cap}")]
    StateSpaceCap { states: u64, cap: u64 },
}

pub type Result<T> = std::result::Result<T, Error>;
