use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid trace: {0}")]
    InvalidTrace(String),

    #[error("departure at slot 0 has no LAS-IA instant")]
    DepartureAtZero,

    #[error("state-dependent arrivals cannot be generated without the service process; use a coupled simulation")]
    StateDependentArrivals,

    #[error("unstable system: {0}")]
    Unstable(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("observed minus actual wait of {offset} for {rule} at {epoch} is outside {{-1, 0, +1}}")]
    OffsetOutOfRange {
        rule: crate::SchedulingRule,
        epoch: crate::ObservationEpoch,
        offset: i64,
    },

    #[error("cost function breaks its support bound for customer {customer} at slot {slot}")]
    SupportViolation { customer: usize, slot: u64 },

    #[error("no sign change for the fixed point in (0, 1): {0}")]
    NoBracket(String),

    #[error("{0}")]
    Parse(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
