use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("expected {expected} slot rewards, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("value {value} at position {index} lies outside [0, 1]")]
    OutOfUnitInterval { index: usize, value: f64 },

    #[error("invalid slate: {0}")]
    InvalidSlate(String),

    #[error("slate space {k}^{m} does not fit in 64 bits")]
    SlateCountOverflow { m: usize, k: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid environment: {0}")]
    InvalidEnvironment(String),

    #[error("reward function or slot distribution has no closed-form mean; use the Monte-Carlo oracle")]
    UnsupportedExact,

    #[error("all slate means are equal, so the optimality gap is undefined")]
    DegenerateGap,

    #[error("slate {0} is not covered by the mean table")]
    MissingSlate(String),

    #[error("explore store is incomplete: {0}")]
    IncompleteStore(String),

    #[error("trajectory is empty")]
    EmptyTrajectory,

    #[error("bid log: {0}")]
    BidLog(String),

    #[error("no bid records for advertiser {advertiser}, day {day}, hour {hour}")]
    EmptyFilter {
        advertiser: String,
        day: u32,
        hour: u32,
    },

    #[error("bid distribution needs two ad exchanges, found {0}")]
    ExchangeCount(usize),

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
