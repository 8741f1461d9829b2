use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Inputs outside an operation's domain: bad sizes, mismatched
    /// dimensions, non-physical density matrices.
    #[error("{0}")]
    Domain(String),

    #[error("eigendecomposition failed in the sector with {popcount} down spins")]
    Eigensolver { popcount: usize },

    /// Scaling analysis could not produce a result (no crossings, too few
    /// usable points).
    #[error("analysis error: {0}")]
    Analysis(String),

    #[error(
        "simplex search did not converge after {evaluations} evaluations; \
         best point {best:?} with quality {best_quality}"
    )]
    NotConverged {
        evaluations: usize,
        best: Vec<f64>,
        best_quality: f64,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
