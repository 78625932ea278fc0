use thiserror::Error;

/// Errors produced by the analysis and simulation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// An iterative or adaptive routine stopped before reaching its target.
    /// `best` carries the best available estimate, when one exists.
    #[error("{what} did not converge: {detail}")]
    Numeric {
        what: &'static str,
        detail: String,
        best: Option<f64>,
    },

    #[error("unsupported case: {0}")]
    Unsupported(String),

    /// The fitted meta distribution has (numerically) zero variance.
    #[error("degenerate meta distribution: point mass at {m1}")]
    Degenerate { m1: f64 },

    #[error("unstable queue: arrival probability {alpha} >= departure probability {d}")]
    Unstable { alpha: f64, d: f64 },

    #[error("topology generation failed: {0}")]
    Topology(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn param<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Parameter(msg.into()))
}
