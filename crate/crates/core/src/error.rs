use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("total weighted mass is zero")]
    ZeroMass,

    #[error("weight at symbol {symbol} is not strictly positive and finite ({value})")]
    NonPositiveWeight { symbol: usize, value: f64 },

    #[error("invalid mass at symbol {symbol}: {value}")]
    InvalidMass { symbol: usize, value: f64 },

    #[error("probabilities sum to {sum}, outside tolerance {tol}")]
    NotNormalized { sum: f64, tol: f64 },

    #[error("index {index} outside valid range {min}..={max}")]
    BadIndex { index: usize, min: usize, max: usize },

    #[error("alphabet mismatch: expected {expected} symbols, got {actual}")]
    AlphabetMismatch { expected: usize, actual: usize },

    #[error("symbol {symbol} outside alphabet of size {size}")]
    InvalidSymbol { symbol: usize, size: usize },

    #[error("{what} exceeds limit ({value} > {limit})")]
    TooLarge {
        what: &'static str,
        value: usize,
        limit: usize,
    },

    #[error("operation requires a binary alphabet, got {size} symbols")]
    WrongAlphabet { size: usize },

    #[error("subset of symbols is empty")]
    EmptySubset,

    #[error("alphabet of size {size} has too many subsets to enumerate (limit {limit})")]
    TooManySubsets { size: usize, limit: usize },

    #[error("unknown series rule `{0}`")]
    UnknownRule(String),

    #[error("invalid weight family: {0}")]
    InvalidFamily(String),

    #[error("weighted empirical denominator is zero")]
    EmptyDenominator,

    #[error("rejection trace has no accepted indices")]
    NoAcceptances,

    #[error("pairwise ratio needs two distinct symbols, got {0} twice")]
    SameSymbol(usize),

    #[error("edges do not form a rooted spanning tree: {0}")]
    NotATree(String),

    #[error("degenerate ratio estimate {ratio} on edge ({from}, {to})")]
    DegenerateRatio { from: usize, to: usize, ratio: f64 },

    #[error("ratio on edge ({from}, {to}) is undefined (no observations)")]
    UndefinedEdge { from: usize, to: usize },

    #[error("support graph over {0:?} is disconnected")]
    DisconnectedSupport(Vec<usize>),

    #[error("permanent evaluation lost all significant digits")]
    Cancellation,

    #[error("inconsistent condition verdicts: {0}")]
    Inconsistent(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("malformed sample file: {0}")]
    SampleFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
