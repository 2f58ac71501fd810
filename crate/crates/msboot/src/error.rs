//! Crate-wide error type.

use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A precondition on an argument was violated.
    #[error("domain error: {0}")]
    Domain(String),

    /// The requested scale grid produces duplicate replicate sizes.
    #[error("scale grid for n={n} collides: replicate sizes {collisions:?} are duplicated; \
             increase n or supply an explicit grid")]
    GridCollision { n: u64, collisions: Vec<u64> },

    /// A count table has no row at the unit scale.
    #[error("no row with sigma2 = 1 (nearest is {nearest}); interpolation between scales \
             is not supported, re-run the bootstrap with a unit-scale entry")]
    MissingUnitScale { nearest: f64 },

    /// Too few informative rows (0 < C < B) to fit the requested model.
    #[error("degenerate fit: {n_informative} informative scales but the model needs \
             {needed}")]
    DegenerateFit { n_informative: usize, needed: usize },

    /// Every candidate model failed to fit.
    #[error("all candidate models are degenerate or failed to converge; report the \
             bootstrap probability alone (BP-only) for this item")]
    AllModelsDegenerate,

    /// The replicate statistic failed and the failure policy is strict.
    #[error("replicate statistic failed at scale index {scale_index}, replicate \
             {replicate}: {message}")]
    ReplicateStatistic {
        scale_index: usize,
        replicate: u64,
        message: String,
    },

    /// Correlation distance is undefined for constant columns.
    #[error("zero-variance column(s) under correlation distance: {columns:?}")]
    ZeroVarianceColumns { columns: Vec<String> },

    /// A point expected on the region boundary is not on it.
    #[error("point is not on the region boundary (offset {distance:.3e} exceeds 1e-9)")]
    NotOnBoundary { distance: f64 },

    /// The p-value was not monotone in the threshold coordinate.
    #[error("p-value is not monotone in the threshold coordinate, bisection would be \
             unsound; diagnostic samples (coordinate, p):\n{details}")]
    NotMonotone { details: String },

    /// A structured input file could not be parsed.
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
