use thiserror::Error;

/// Errors produced by rule construction, enumeration, measures and entropy computations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("modulus must be at least 2, got {0}")]
    InvalidModulus(u64),

    #[error("rule on [-{l}, {r}] needs {expected} coefficients, got {got}")]
    CoefficientCount {
        l: usize,
        r: usize,
        expected: usize,
        got: usize,
    },

    #[error("modulus mismatch: {0} vs {1}")]
    ModulusMismatch(u32, u32),

    #[error("offset {offset} is outside the neighborhood [-{l}, {r}]")]
    OffsetOutOfRange { offset: i64, l: usize, r: usize },

    #[error("symbol {symbol} is not in Z_{m}")]
    InvalidSymbol { symbol: u32, m: u32 },

    #[error("word of length {len} is too short: need at least {needed}")]
    WordTooShort { len: usize, needed: usize },

    #[error("word on [{start}, {end}] does not cover coordinates [{a}, {b}] at every step")]
    WindowNotCovered {
        a: i64,
        b: i64,
        start: i64,
        end: i64,
    },

    #[error("enumeration of {required} entries exceeds the cap of {cap}")]
    CapExceeded { required: u128, cap: u128 },

    #[error("rule support of width {width} exceeds the maximum {max}")]
    SupportTooWide { width: u128, max: usize },

    #[error("invalid stochastic matrix: {0}")]
    InvalidMatrix(String),

    #[error("invalid probability vector: {0}")]
    InvalidDistribution(String),

    #[error("power iteration did not converge after {iterations} iterations (residual {residual:e}); the chain may be periodic")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("partition atom measures sum to {0}, expected 1")]
    NotAPartition(f64),

    #[error("invalid partition window [{a}, {b}]")]
    InvalidWindow { a: i64, b: i64 },

    #[error("rule is not bipermutative: {}", describe_ends(*.left, *.right))]
    NotBipermutative { left: bool, right: bool },
}

fn describe_ends(left: bool, right: bool) -> &'static str {
    match (left, right) {
        (false, false) => "neither end coefficient is a unit",
        (true, false) => "right end coefficient is not a unit",
        (false, true) => "left end coefficient is not a unit",
        (true, true) => "both ends are units",
    }
}

impl Error {
    /// True for resource-cap failures, which callers may treat as a soft stop.
    pub fn is_cap(&self) -> bool {
        matches!(
            self,
            Error::CapExceeded { .. } | Error::SupportTooWide { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
