use crate::C64;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("point {0} lies outside the domain")]
    OutsideDomain(C64),

    #[error("unsupported domain: {0}")]
    UnsupportedDomain(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("derivatives requested at singular point {0}")]
    SingularPoint(C64),

    #[error("invalid subdomain mask: {0}")]
    Mask(String),

    #[error("{what} did not converge (residual {residual:e})")]
    NotConverged { what: String, residual: f64 },

    #[error("square-root branch lost at {0}: path meets a zero of φ")]
    Branch(C64),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
