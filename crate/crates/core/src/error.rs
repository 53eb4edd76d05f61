use thiserror::Error;

/// Errors raised while building, solving or validating a model.
///
/// Numeric payloads are carried as `f64` regardless of the scalar type used for the solve.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("unstable model: rho = {rho} (must be < 1)")]
    Unstable { rho: f64 },
    #[error("non-positive rate: {name}")]
    NonPositiveRate { name: String },
    #[error("bad batch distribution: {0}")]
    BadBatch(String),
    #[error("bad model parameters: {0}")]
    BadParams(String),
    #[error("no sign change of f_{level} on (0,1)")]
    NoSignChange { level: usize },
    #[error("closed-form root requires single arrivals (batch size 1)")]
    WrongBatchKind,
    #[error("level {level} out of range for c = {c}")]
    InvalidLevel { level: usize, c: usize },
    #[error("numerical breakdown: {0}")]
    NumericalBreakdown(String),
    #[error("truncation too small: tail mass {tail:e} exceeds {threshold:e}")]
    TruncationTooSmall { tail: f64, threshold: f64 },
    #[error("tail too heavy for decomposition check: {tail:e}")]
    TailTooHeavy { tail: f64 },
    #[error("singular system at state index {state}")]
    SingularSystem { state: usize },
    #[error("config error: {0}")]
    Config(String),
}

impl Error {
    /// True for errors caused by the user's model description rather than by the numerics.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Unstable { .. }
                | Error::NonPositiveRate { .. }
                | Error::BadBatch(_)
                | Error::BadParams(_)
                | Error::WrongBatchKind
                | Error::InvalidLevel { .. }
                | Error::Config(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
