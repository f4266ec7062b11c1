use thiserror::Error;

/// Errors produced by the capacity, solver and simulation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A model, link, block or system parameter violates its invariant.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The exponential moment is not finite at this exponent.
    #[error("exponential moment diverges at s = {s}")]
    DivergentMoment { s: f64 },

    /// Quadrature or a solver could not reach the requested accuracy.
    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    /// A bracketed root search found no sign change.
    #[error("no root in bracket [{lo}, {hi}] (f(lo) = {f_lo}, f(hi) = {f_hi})")]
    NoRootInBracket {
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
    },

    /// The peak S-R service rate does not exceed the minimum R-D rate, so the
    /// relay never needs to buffer and no finite threshold exponent exists.
    #[error("relay support is degenerate: S-R peak rate does not exceed R-D minimum rate")]
    SupportDegenerate,

    /// Average S-R rate is larger than the average R-D rate.
    #[error("stability violated: mean S-R rate {source_rate} >= mean R-D rate {relay_rate} bits/block")]
    StabilityViolation { source_rate: f64, relay_rate: f64 },

    /// Average rates of both hops coincide within tolerance.
    #[error("stability boundary: mean S-R rate {source_rate} equals mean R-D rate {relay_rate} bits/block")]
    StabilityBoundary { source_rate: f64, relay_rate: f64 },

    /// Too few tail points to fit an overflow exponent.
    #[error("insufficient tail: {usable} usable thresholds (need 3); enlarge num_blocks")]
    InsufficientTail { usable: usize },

    /// Configuration file could not be parsed or validated.
    #[error("config error: {0}")]
    Config(String),
}

impl Error {
    /// Short machine-readable name, used as a CSV status value.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::DivergentMoment { .. } => "divergent_moment",
            Error::NumericalFailure(_) => "numerical_failure",
            Error::NoRootInBracket { .. } => "no_root_in_bracket",
            Error::SupportDegenerate => "support_degenerate",
            Error::StabilityViolation { .. } => "stability_violation",
            Error::StabilityBoundary { .. } => "stability_boundary",
            Error::InsufficientTail { .. } => "insufficient_tail",
            Error::Config(_) => "config_error",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
