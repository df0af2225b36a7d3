use thiserror::Error;

/// Errors raised by learners, bound evaluators, generators and oracles.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum AggError {
    #[error("loss {value} for expert {index} lies outside [0, 1] after rescaling")]
    LossOutOfRange { index: usize, value: f64 },

    #[error("invalid loss range ({a}, {b}): need finite a < b")]
    InvalidRange { a: f64, b: f64 },

    #[error("confidence {value} for expert {index} lies outside [0, 1]")]
    ConfidenceOutOfRange { index: usize, value: f64 },

    #[error("all confidences are zero; the active set is empty")]
    EmptyActiveSet,

    #[error("expected {expected} experts, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("expert count must be at least 1")]
    NoExperts,

    #[error("invalid initial weights: {0}")]
    InvalidWeights(String),

    #[error("invalid mixture: {0}")]
    InvalidMixture(String),

    #[error("learning rate {rate} for expert {index} outside (0, {max}]")]
    RateOutOfRange { index: usize, rate: f64, max: f64 },

    #[error("predict called twice without an intervening update")]
    StaleRound,

    #[error("update called without a pending prediction")]
    MissingPrediction,

    #[error("confidences passed to update differ from those used at predict time")]
    ConfidenceMismatch,

    #[error("configuration mismatch: {0}")]
    ConfigMismatch(String),

    #[error("bound requires at least two experts (ln K > 0)")]
    DegenerateK,

    #[error("input must be nonnegative, got {0}")]
    NegativeInput(f64),

    #[error("alpha {0} outside (0, 1]")]
    AlphaOutOfRange(f64),

    #[error("delta {0} outside (0, 1)")]
    DeltaOutOfRange(f64),

    #[error("domain error: {0}")]
    DomainError(String),

    #[error("pseudo-loss {value} for expert {index} outside declared range [{low}, {high}]")]
    GradientBoundViolated {
        index: usize,
        value: f64,
        low: f64,
        high: f64,
    },

    #[error("invalid generator spec: {0}")]
    InvalidSpec(String),
}

pub type Result<T, E = AggError> = std::result::Result<T, E>;
