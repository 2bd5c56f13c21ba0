use thiserror::Error;

/// Errors raised anywhere in the crate.
///
/// Every variant carries a stable machine-readable code (see [`Error::code`])
/// which front ends surface verbatim.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("{0} is not an odd prime")]
    InvalidPrime(u64),
    #[error("value {0} has negative p-adic valuation")]
    NegativeValuation(String),
    #[error("division by zero")]
    DivisionByZero,
    #[error("moduli {0} and {1} do not match")]
    ModulusMismatch(u64, u64),
    #[error("function has a pole at epsilon = 0")]
    PoleAtZero,
    #[error("rational function degree {degree} exceeds bound {bound}")]
    DegreeOverflow { degree: usize, bound: usize },
    #[error("coefficient table has no exact zero (delta vanishes mod p)")]
    NoExactZero,
    #[error("parameter {0} is not p-integral")]
    NonIntegralParameter(&'static str),
    #[error("top-level state has u_n = infinity")]
    InfiniteInitial,
    #[error("no case applies at u_n = {u}, n = {n}")]
    UndefinedCase { u: u64, n: i64 },
    #[error("tau denominator vanishes exactly at n = {0}")]
    ZeroTauDenominator(i64),
    #[error("parse error at line {line}, column {column}: expected {expected}")]
    Parse {
        line: usize,
        column: usize,
        expected: String,
    },
    #[error("unbound parameter `{0}`")]
    UnboundParameter(String),
    #[error("no period found: {0}")]
    NoPeriodFound(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidPrime(_) => "INVALID_PRIME",
            Error::NegativeValuation(_) => "NEGATIVE_VALUATION",
            Error::DivisionByZero => "DIVISION_BY_ZERO",
            Error::ModulusMismatch(..) => "MODULUS_MISMATCH",
            Error::PoleAtZero => "POLE_AT_ZERO",
            Error::DegreeOverflow { .. } => "DEGREE_OVERFLOW",
            Error::NoExactZero => "NO_EXACT_ZERO",
            Error::NonIntegralParameter(_) => "NON_INTEGRAL_PARAMETER",
            Error::InfiniteInitial => "INFINITE_INITIAL",
            Error::UndefinedCase { .. } => "UNDEFINED_CASE",
            Error::ZeroTauDenominator(_) => "ZERO_TAU_DENOMINATOR",
            Error::Parse { .. } => "PARSE_ERROR",
            Error::UnboundParameter(_) => "UNBOUND_PARAMETER",
            Error::NoPeriodFound(_) => "NO_PERIOD_FOUND",
            Error::InvalidArgument(_) => "INVALID_ARGUMENT",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
