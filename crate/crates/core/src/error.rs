use thiserror::Error;

/// Errors produced by the simulator.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension {0} out of range (expected 1..=6)")]
    Dimension(usize),

    #[error("side length {0} out of range (expected >= 2)")]
    Side(usize),

    #[error("lattice with side {side} in {dim} dimensions exceeds the site cap {cap}")]
    TooManySites { dim: usize, side: usize, cap: usize },

    #[error("site index {index} out of range for a lattice of {n_sites} sites")]
    SiteIndex { index: usize, n_sites: usize },

    #[error("axis {axis} out of range for a {dim}-dimensional lattice")]
    Axis { axis: usize, dim: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("probe energy {energy} is not strictly inside the gap {gap}")]
    OutsideGap { energy: f64, gap: f64 },

    #[error("continuum integral diverges: {0}")]
    Divergent(String),

    #[error("no critical point: {0}")]
    NoSolution(String),

    #[error("root bracket has no sign change: {0}")]
    Bracket(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Mismatch { expected: usize, got: usize },

    #[error("dense dimension {dim} exceeds cap {cap}")]
    DenseCap { dim: usize, cap: usize },

    #[error("eigendecomposition failed")]
    Eigen,

    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
