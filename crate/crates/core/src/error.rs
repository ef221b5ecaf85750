use thiserror::Error;

/// Errors raised by the analytic evaluators and the simulator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter {
        name: &'static str,
        reason: &'static str,
    },

    #[error("traffic intensity {rho} is not below 1; the queue has no stationary regime")]
    Unstable { rho: f64 },

    #[error("probability of an arrival-free slot is zero; the balance recursion cannot be solved")]
    ZeroIdleProbability,

    #[error(
        "stationary distribution did not close: residual mass {residual:e} after {terms} terms"
    )]
    TruncationExceeded { residual: f64, terms: usize },

    #[error("active index set cannot be bounded")]
    UnboundedIndexSet,

    #[error("power-sum expansion refused for L = {half_support} (cap {cap}); use the elementary-symmetric evaluator")]
    GinibreCapExceeded { half_support: u32, cap: u32 },

    #[error("mean return time is infinite: P(|I| = {occupancy}) = 0")]
    InfiniteReturnTime { occupancy: usize },

    #[error("conditional occupancy mean undefined: no mass at |I| >= {min}")]
    EmptyConditioning { min: usize },

    #[error("series of length {len} is too short for lag {lag}")]
    SeriesTooShort { len: usize, lag: usize },

    #[error("occupancy tracking unsupported: {0}")]
    TrackingUnsupported(&'static str),

    #[error("busy-period statistics need occupancy tracking")]
    NotTracked,
}

impl Error {
    /// True for errors caused by the numbers themselves (divergence,
    /// unsolvable recursions) rather than by a malformed configuration.
    pub fn is_numeric_domain(&self) -> bool {
        !matches!(
            self,
            Error::InvalidParameter { .. } | Error::TrackingUnsupported(_) | Error::NotTracked
        )
    }
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: &'static str) -> Error {
    Error::InvalidParameter { name, reason }
}
