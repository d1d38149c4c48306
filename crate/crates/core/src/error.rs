use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{what} requires n <= {max}, got n = {n}")]
    Capacity { what: &'static str, n: usize, max: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("time step {dt} violates the stability guard dt * {max_energy} <= 0.1")]
    StabilityGuard { dt: f64, max_energy: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("eigensolver did not converge for eigenvalue {index}")]
    NoConvergence { index: usize },

    #[error("every tracked level merges into the ground level; increase the level count")]
    AllLevelsMerging,
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
