use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed face {vertices:?} for n = {n}: {reason}")]
    MalformedFace {
        vertices: Vec<u32>,
        n: u32,
        reason: &'static str,
    },
    #[error("rank {rank} out of range: C({n},{k}) = {count}")]
    RankOutOfRange {
        rank: u64,
        n: u32,
        k: usize,
        count: u64,
    },
    #[error("binomial coefficient C({n},{k}) overflows 64 bits")]
    Overflow { n: u64, k: u64 },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("numerical failure: {0}")]
    Numerics(String),
    #[error("{k} phases requested but the tree is truncated at depth {depth}")]
    Truncation { k: usize, depth: usize },
    #[error("the resolvent parameter s must be nonzero")]
    SingularParameter,
    #[error("modulus {0} is not prime")]
    NotPrime(u64),
    #[error("cost limit exceeded: {0}")]
    CostLimit(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
