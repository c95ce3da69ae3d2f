use thiserror::Error;

/// The bidding constraint an illegal bid breaks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Violation {
    /// Raise cost exceeds the budget left after currently held items.
    Budget,
    /// `|X| + |Y|` exceeds the bidder's eligibility.
    Eligibility,
    /// The bid includes an item the bidder is already temporarily winning.
    AlreadyWinning,
    /// The bid names an item index outside `0..m`.
    UnknownItem,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Violation::Budget => "budget constraint violated",
            Violation::Eligibility => "eligibility constraint violated",
            Violation::AlreadyWinning => "bid on an item already temporarily won",
            Violation::UnknownItem => "bid on an item outside the auction",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid auction configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid bidder profile {bidder}: {reason}")]
    InvalidProfile { bidder: usize, reason: String },
    #[error("the auction is closed")]
    Terminal,
    #[error("bidder index {0} out of range")]
    BidderOutOfRange(usize),
    #[error("bidder {bidder}: {violation}")]
    IllegalBid { bidder: usize, violation: Violation },
    #[error("item {item}: {reason}")]
    InvalidWinner { item: usize, reason: String },
    #[error("{m} items exceeds the exhaustive enumeration limit of {max}")]
    TooManyItems { m: usize, max: usize },
    #[error("auction exceeded its round bound of {0}")]
    RoundBoundExceeded(u64),
    #[error("hash depth bound exceeded on item {item}: {delta_ticks} ticks above root with r_max = {r_max}")]
    HashOverflow { item: usize, delta_ticks: u64, r_max: u32 },
    #[error("argument out of domain: {0}")]
    OutOfDomain(String),
    #[error("unknown strategy `{0}`")]
    UnknownStrategy(String),
    #[error("strategy `{0}` is already registered")]
    DuplicateStrategy(String),
    #[error("strategy `{name}`: {reason}")]
    StrategyConfig { name: String, reason: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
