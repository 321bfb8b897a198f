use thiserror::Error;

/// Errors produced by the engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("alphabet size must be at least 2, got {0}")]
    Alphabet(usize),

    #[error("alphabet mismatch: {0} vs {1}")]
    AlphabetMismatch(usize, usize),

    #[error("cannot re-represent a depth-{current} function at depth {requested}")]
    Depth { current: usize, requested: usize },

    #[error("table length {got} does not match alphabet^depth = {expected}")]
    TableLength { expected: usize, got: usize },

    #[error("symbol {symbol} outside 1..={alphabet}")]
    Symbol { symbol: usize, alphabet: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("potential is not a normalized Jacobian (sup |L1 - 1| = {residual:e})")]
    NotNormalized { residual: f64 },

    #[error("{what} did not converge after {iterations} iterations")]
    NonConvergence { what: String, iterations: usize },

    #[error("storage envelope exceeded: {entries} table entries requested, limit is {limit}")]
    Envelope { entries: u128, limit: usize },

    #[error("target is not attainable: {0}")]
    Infeasible(String),

    #[error("unsupported depth {0} for this operation")]
    UnsupportedDepth(usize),

    #[error("internal consistency error: {0}")]
    Internal(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Numeric failures (non-convergence) are distinguished from bad input.
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::NonConvergence { .. })
    }
}
