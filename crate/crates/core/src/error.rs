use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("coordinate {coord:?} lies outside the {side}^{dim} box")]
    Coordinate {
        coord: Vec<i64>,
        side: usize,
        dim: usize,
    },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("variant {0} is not simulated on the lattice")]
    UnsupportedVariant(&'static str),

    /// Survival estimates along a λ scan decreased by more than their
    /// confidence intervals allow.
    #[error("empirical survival curve is not monotone: {0}")]
    NonMonotone(String),

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("stationary law is not summable: {0}")]
    NonSummable(String),

    #[error("step size violates stability: {0}")]
    Stability(String),

    #[error("grids do not match: {0}")]
    GridMismatch(String),

    #[error("front left the observation window: {0}")]
    Window(String),

    #[error("simplex violated at t = {t}: {detail}")]
    Simplex { t: f64, detail: String },

    #[error("event log missing: {0}")]
    MissingLog(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn arg<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Argument(msg.into()))
}
