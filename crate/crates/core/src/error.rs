use thiserror::Error;

/// Errors raised by the reliability and cost-rate computations.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the function (negative time,
    /// probability outside `[0, 1]`, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// A model parameter violates its invariant.
    #[error("parameter error: {0}")]
    Parameter(String),

    /// A derivative was requested on the boundary of the unit cube.
    #[error("boundary error: {0}")]
    Boundary(String),

    /// A Clayton partial was requested inside the zero region of the copula.
    #[error("region error: {0}")]
    Region(String),

    /// A hazard at t = 0 with decreasing-hazard Weibull shape.
    #[error("singularity: {0}")]
    Singularity(String),

    /// A ratio whose denominator vanished.
    #[error("division by zero: {0}")]
    Division(String),

    /// Quadrature or root finding failed to converge.
    #[error("numeric error: {message} (estimate {estimate:e}, error {error_estimate:e})")]
    Numeric {
        message: String,
        estimate: f64,
        error_estimate: f64,
    },

    /// The first-order residual never changed sign on the search range.
    #[error("no interior optimum on (0, {t_hi}]: {boundary}")]
    NoInteriorOptimum { t_hi: f64, boundary: BoundaryBehavior },

    /// The discrete predicate was never satisfied up to the scan cap.
    #[error("no finite optimal period count up to K = {k_cap}")]
    NoFiniteOptimum { k_cap: u64 },

    /// Sampling is not available for this copula configuration.
    #[error("capability error: {0}")]
    Capability(String),
}

/// Shape of the cost-rate curve when no interior optimum exists.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryBehavior {
    /// Cost rate keeps decreasing: never replace preventively.
    DecreasingToInfinity,
    /// The residual was already non-negative at the smallest grid point.
    IncreasingFromZero,
    /// The residual was not evaluable on the remaining range.
    Unresolved,
}

impl std::fmt::Display for BoundaryBehavior {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BoundaryBehavior::DecreasingToInfinity => {
                write!(f, "cost rate decreases toward T = infinity (never replace preventively)")
            }
            BoundaryBehavior::IncreasingFromZero => {
                write!(f, "cost rate increases from the smallest grid point")
            }
            BoundaryBehavior::Unresolved => write!(f, "residual not evaluable on the search range"),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
