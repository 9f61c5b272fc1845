use thiserror::Error;

/// Error type shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("non-finite input: {0}")]
    NonFinite(&'static str),

    #[error("{name} = {value} out of range {range}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("n = {n} too large for {op} (max {max})")]
    TooLarge { op: &'static str, n: usize, max: usize },

    #[error("empty sample set")]
    EmptySamples,

    #[error("sample set too small: N = {n}, need at least {min}")]
    TooFewSamples { n: usize, min: usize },

    #[error("total weight is zero")]
    ZeroWeight,

    #[error("all filter scores are zero; caller should have terminated")]
    AllScoresZero,

    #[error("weight budget exhausted: removed {removed:.6} > {budget:.6}; corruption exceeds the model")]
    WeightBudgetExhausted { removed: f64, budget: f64 },

    #[error("matrix is not symmetric (max asymmetry {0:.3e})")]
    NotSymmetric(f64),

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("unknown adversary strategy: {0}")]
    UnknownStrategy(String),

    #[error("moment matching infeasible at this grid: minimal signed-density l1 norm {min_l1:.4} > 2; increase m or grid_size")]
    MomentMatchInfeasible { min_l1: f64 },

    #[error("linear program error: {0}")]
    LinearProgram(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("malformed file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
