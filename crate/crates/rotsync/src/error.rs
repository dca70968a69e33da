//! Crate-wide error type.

use thiserror::Error;

use crate::manifold::Ball;

#[derive(Debug, Error)]
pub enum SyncError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("target lies within {tol:e} of the cut locus of the base rotation")]
    CutLocus { tol: f64 },

    #[error("no enclosing ball of radius < pi/2 exists (best radius {radius})")]
    NoSmallBall { ball: Ball, radius: f64 },

    #[error("halfspace depth is only supported for dimensions 1..=3, got {dim}")]
    UnsupportedDim { dim: usize },

    #[error("depth search exhausted its budget of {budget} trials (needed depth {needed}, best {best})")]
    DepthSearchFailed {
        budget: usize,
        needed: usize,
        best: usize,
    },

    #[error("empty depth region: ceil(beta*n) = {lo} exceeds floor((1-beta)*n) = {hi}")]
    EmptyRegion { lo: usize, hi: usize },

    #[error("graph edges carry unknown labels; good/bad split unavailable")]
    UnknownLabels,

    #[error("exhaustive well-connectedness scan is capped at n = 24, got n = {n}")]
    TooLarge { n: usize },

    #[error("could not sample a connected graph in {attempts} attempts")]
    Disconnected { attempts: usize },

    #[error("corruption budget infeasible: {0}")]
    InfeasibleBudget(String),

    #[error("line search found a negative derivative but no breakpoint (internal inconsistency)")]
    NoBreakpoint,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, SyncError>;
