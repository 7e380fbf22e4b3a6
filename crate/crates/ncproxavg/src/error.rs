use thiserror::Error;

/// Errors produced by construction, evaluation, and the numeric oracles.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed input data (problem files, weights, grids, ...).
    #[error("invalid input: {0}")]
    Invalid(String),

    /// A prox-parameter that does not dominate the required curvature bound.
    #[error("prox-parameter below threshold: r = {r} but {context} requires r > {bound}")]
    ProxParameter { r: f64, bound: f64, context: String },

    /// The grid oracle found its minimizer on the boundary even after one expansion.
    #[error("grid too small: minimizer stayed on the boundary near {at:?} after one expansion")]
    GridTooSmall { at: Vec<f64> },

    /// The oracle objective was nowhere finite on the grid.
    #[error("improper on grid: objective has no finite value on the grid")]
    ImproperOnGrid,

    /// Gradient requested where the proximal point is a set, not a point.
    #[error("gradient undefined here: proximal point is multivalued at {at:?}")]
    MultivaluedProx { at: Vec<f64> },

    /// A sequence handed to the limit checker does not settle down.
    #[error("non-convergent sequence: {0}")]
    NonConvergent(String),

    #[error("internal error: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
