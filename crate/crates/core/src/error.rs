use thiserror::Error;

use crate::solver::RejectionReason;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("order below quadratic (got {0}, need at least 2)")]
    OrderBelowQuadratic(u32),
    #[error("quadratic coefficient a'_2 must be positive after merging (got {0})")]
    NonPositiveQuadratic(f64),
    #[error("coefficient index {index} outside 2..={order}")]
    CoefficientIndex { index: u32, order: u32 },
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("domain error: {0}")]
    Domain(String),
    #[error(
        "stationarity polynomial is ill-conditioned (coefficient spread {spread:.3e} after \
         normalization); rescale the coefficients or the unit system"
    )]
    IllConditioned { spread: f64 },
    #[error("eigenvalue solver failed to converge on the companion matrix")]
    EigenSolver,
    #[error("internal consistency: {0}")]
    Consistency(String),
    #[error("branch {0} is not accepted")]
    BranchNotAccepted(u32),
    #[error("branch rejected: {0}")]
    BranchRejected(RejectionReason),
    #[error("no admissible oscillation state")]
    NoAdmissibleState,
    #[error("degenerate stationary point — sensitivity undefined")]
    DegenerateStationaryPoint,
}
