use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("basis of {requested} states exceeds the budget of {budget}")]
    Capacity { requested: u128, budget: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("Lanczos did not converge after {iterations} iterations (best estimates: [{e_min}, {e_max}])")]
    LanczosNotConverged { iterations: usize, e_min: f64, e_max: f64 },

    #[error("quadrature did not converge: {0}")]
    QuadratureNotConverged(String),

    #[error("numerical instability: {0}")]
    Unstable(String),

    #[error("site {site} out of range for {n_sites} sites")]
    SiteOutOfRange { site: usize, n_sites: usize },

    #[error("state leaves the supported excitation sectors: {0}")]
    ExcitationSector(String),

    #[error("inconsistent time grids: {0}")]
    InconsistentGrid(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
