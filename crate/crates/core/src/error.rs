use thiserror::Error;

/// Errors produced by the analytic and Monte Carlo routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument `{name}`: {reason}")]
    InvalidArgument { name: &'static str, reason: String },

    #[error("{scheme} requires {requirement}")]
    SchemeMismatch {
        scheme: &'static str,
        requirement: &'static str,
    },

    /// The exact combiner-SNR law of optimal-beamforming MIMO is unknown.
    #[error("unsupported-exact-cdf: {0} has no closed-form SNR distribution, use the MIMO bounds")]
    UnsupportedExactCdf(&'static str),

    #[error("ga-invalid-regime: diversity order {order} is below [Q^-1(eps)]^2 = {required:.6}")]
    GaInvalidRegime { order: f64, required: f64 },

    #[error("{0}")]
    Unsupported(String),

    #[error("bracket expansion failed after {iterations} doublings (last upper end {upper})")]
    BracketFailure { iterations: u32, upper: f64 },

    #[error("function is not monotone: f({x}) = {value} lies outside [{low}, {high}]")]
    NonMonotone {
        x: f64,
        value: f64,
        low: f64,
        high: f64,
    },

    #[error("{what} did not converge within {iterations} iterations")]
    NoConvergence { what: &'static str, iterations: u32 },

    #[error("asymptotic benchmark needs M, N >= {floor} (got M = {m}, N = {n})")]
    BelowAsymptoticFloor { m: u64, n: u64, floor: u64 },

    #[error("empty sample set")]
    EmptySamples,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidArgument {
        name,
        reason: reason.into(),
    }
}

/// Checks `0 < eps < 1`.
pub(crate) fn check_probability(eps: f64) -> Result<()> {
    if eps.is_finite() && eps > 0.0 && eps < 1.0 {
        Ok(())
    } else {
        Err(invalid("eps", format!("{eps} is not in (0, 1)")))
    }
}
