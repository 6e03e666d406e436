use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension must be 2 or 3, got {0}")]
    InvalidDimension(usize),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("path never enters the closed ball")]
    NoVisit,

    #[error("site {index} coincides with the inversion center")]
    Singularity { index: usize },

    #[error("path has {len} sites, brute force is limited to {max}")]
    PathTooLong { len: usize, max: usize },

    #[error("index range [{lo}, {hi}] is out of bounds for a path with {n_steps} steps")]
    IndexOutOfRange { lo: usize, hi: usize, n_steps: usize },

    #[error("grid spacing {grid_h} is coarser than a quarter of the tube radius {radius}")]
    ResolutionGuard { grid_h: f64, radius: f64 },

    #[error("need at least {needed} {what}, got {got}")]
    TooFew {
        what: &'static str,
        needed: usize,
        got: usize,
    },

    #[error("no trial survived at any level")]
    NoSurvival,

    #[error("target point is degenerate: {0}")]
    DegenerateTarget(String),

    #[error("malformed path data: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
