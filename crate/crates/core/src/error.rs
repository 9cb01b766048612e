use thiserror::Error;

/// Errors raised by the environment, codec, planner and abstraction layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("row for {key} sums to {sum}, expected 1")]
    RowSum { key: String, sum: String },

    #[error("no transition row for reachable context {0}")]
    MissingRow(String),

    #[error("alias action {alias} differs from its target {target} in context {context}")]
    AliasMismatch {
        alias: String,
        target: String,
        context: String,
    },

    #[error("enumeration would exceed the budget of {cap} histories")]
    BudgetExceeded { cap: usize },

    #[error("code table is not a bijection: {0}")]
    NotBijective(String),

    #[error("degenerate interval [{lo}, {hi}]")]
    DegenerateInterval { lo: f64, hi: f64 },

    #[error("sequentialized history is not a prefix of any transformed history: {0}")]
    UnreachableHistory(String),

    #[error("environment is not observation-Markov (context length {0})")]
    NotMarkovEnv(usize),

    #[error("horizon {horizon} needs {nodes} nodes, budget is {budget}")]
    HorizonTooLarge {
        horizon: usize,
        nodes: usize,
        budget: usize,
    },

    #[error("policy has no row for {0}")]
    MissingPolicyRow(String),

    #[error("abstract state {0} has no member histories")]
    EmptyCell(usize),

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("invalid sizes: {0}")]
    InvalidSizes(String),

    #[error("malformed input: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
