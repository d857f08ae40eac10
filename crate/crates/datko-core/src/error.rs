use alloc::string::String;
use core::fmt;

use crate::expr::ParseError;

/// Unified error type for the numerical core.
#[derive(Debug, Clone, PartialEq)]
pub enum CoreError {
    /// Expression text could not be parsed.
    Parse(ParseError),
    /// Expression evaluation divided by an exact zero.
    DivisionByZero { t: f64 },
    /// Expression or propagator evaluation left the finite range.
    NonFiniteValue { t: f64 },
    /// An operation received an empty collection it cannot work with.
    EmptyInput { what: &'static str },
    NonFiniteComponent { index: usize },
    DimensionMismatch { expected: usize, got: usize },
    NegativeTime { t: f64 },
    /// Propagation backwards in time on a non-reversible family.
    TimeOrder { t: f64, s: f64 },
    OutOfDomain { t: f64, domain_end: f64 },
    /// Adaptive integration could not take a step of representable size.
    StepUnderflow { t: f64 },
    /// The integrated state stopped being finite.
    NonFiniteState { t: f64 },
    /// Power iteration did not reach its tolerance within the iteration cap.
    PowerIterationStall { iterations: usize, residual: f64 },
    TabulatedGrid { reason: &'static str },
    /// Step refinement of a quadrature did not converge; the last two
    /// estimates are reported.
    QuadratureStall { last: f64, previous: f64 },
    /// The requested exponent lacks the admissibility evidence the
    /// operation requires.
    InadmissibleExponent { alpha: f64 },
    InvalidDelta { delta: f64 },
    /// The measured integral constant kept growing when the window was
    /// doubled, so no finite constant is supported by the data.
    KValidationFailed { k_short: f64, k_long: f64 },
    InvalidBracket { alpha: f64, reason: &'static str },
    /// A propagator norm exceeded the representable range at time t.
    Overflow { t: f64 },
    InvalidParameter { what: String },
}

impl fmt::Display for CoreError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoreError::Parse(e) => write!(f, "parse error: {e}"),
            CoreError::DivisionByZero { t } => write!(f, "division by zero at t = {t}"),
            CoreError::NonFiniteValue { t } => write!(f, "non-finite value at t = {t}"),
            CoreError::EmptyInput { what } => write!(f, "empty input: {what}"),
            CoreError::NonFiniteComponent { index } => {
                write!(f, "non-finite vector component at index {index}")
            }
            CoreError::DimensionMismatch { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
            CoreError::NegativeTime { t } => write!(f, "negative time {t}"),
            CoreError::TimeOrder { t, s } => {
                write!(f, "t = {t} precedes s = {s} and the family is not reversible")
            }
            CoreError::OutOfDomain { t, domain_end } => {
                write!(f, "time {t} outside the function domain [0, {domain_end}]")
            }
            CoreError::StepUnderflow { t } => write!(f, "integration step underflow at t = {t}"),
            CoreError::NonFiniteState { t } => write!(f, "non-finite state at t = {t}"),
            CoreError::PowerIterationStall { iterations, residual } => write!(
                f,
                "power iteration stalled after {iterations} iterations (residual {residual:e})"
            ),
            CoreError::TabulatedGrid { reason } => write!(f, "tabulated grid: {reason}"),
            CoreError::QuadratureStall { last, previous } => write!(
                f,
                "quadrature refinement stalled (last two estimates {last:e}, {previous:e})"
            ),
            CoreError::InadmissibleExponent { alpha } => {
                write!(f, "exponent {alpha} is not admissible on the checked window")
            }
            CoreError::InvalidDelta { delta } => {
                write!(f, "delta = {delta} outside the open interval (0, 1)")
            }
            CoreError::KValidationFailed { k_short, k_long } => write!(
                f,
                "integral constant grew under window doubling ({k_short} to {k_long})"
            ),
            CoreError::InvalidBracket { alpha, reason } => {
                write!(f, "invalid search bracket at alpha = {alpha}: {reason}")
            }
            CoreError::Overflow { t } => write!(f, "propagator overflow at t = {t}"),
            CoreError::InvalidParameter { what } => write!(f, "invalid parameter: {what}"),
        }
    }
}

impl core::error::Error for CoreError {
    fn source(&self) -> Option<&(dyn core::error::Error + 'static)> {
        match self {
            CoreError::Parse(e) => Some(e),
            _ => None,
        }
    }
}

impl From<ParseError> for CoreError {
    fn from(e: ParseError) -> Self {
        CoreError::Parse(e)
    }
}
