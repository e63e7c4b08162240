use thiserror::Error;

use crate::quantum::SlotId;

#[derive(Debug, Error)]
pub enum Error {
    /// A value fell outside the domain of an encoding or arithmetic routine.
    #[error("domain error: {0}")]
    Domain(String),

    /// A call violated an operation's preconditions.
    #[error("usage error: {0}")]
    Usage(String),

    #[error("slot {0} is not live")]
    DeadSlot(SlotId),

    /// A matrix or parameter set failed a numeric validity check.
    #[error("validation error: {0}")]
    Validation(String),

    /// A forced measurement outcome had zero Born probability.
    #[error("forced outcome {outcome} on slot {slot} has zero probability")]
    ImpossibleOutcome { slot: SlotId, outcome: usize },

    #[error("protocol violation: {0}")]
    ProtocolViolation(String),

    #[error("insufficient shares: {present} of {required} party records supplied")]
    InsufficientShares { present: usize, required: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn usage(msg: impl Into<String>) -> Error {
    Error::Usage(msg.into())
}
