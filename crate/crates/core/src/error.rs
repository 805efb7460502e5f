use thiserror::Error;

/// Errors raised anywhere in the fiber-analysis pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("malformed input: {0}")]
    Schema(String),
    #[error("polytope has no rational interior point")]
    EmptyInterior,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("series truncations differ ({0} vs {1})")]
    TruncationMismatch(String, String),
    #[error("series is not a unit of the Novikov ring")]
    NotAUnit,
    #[error("series has negative valuation")]
    NegativeValuation,
    #[error("fiber is not in the interior of the polytope")]
    NotInterior,
    #[error("point has a zero component")]
    ZeroComponent,
    #[error("direction {0} has a uniquely attained minimal valuation")]
    DegenerateDirection(usize),
    #[error("leading Hessian is singular (condition number {0:e})")]
    SingularLeadingHessian(f64),
    #[error("lifting did not converge: {0}")]
    NoConvergence(String),
    #[error("no critical point found at this λ to order {0}")]
    Inconsistent(String),
    #[error("direction is not integrally transverse to facet {0}")]
    NotTransverse(usize),
    #[error("polytope is unbounded")]
    UnboundedPolytope,
    #[error("operation needs a {expected}-dimensional polytope, got {got}")]
    DimensionUnsupported { expected: usize, got: usize },
}

impl Error {
    /// True for errors caused by invalid user input rather than by the computation.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Schema(_)
                | Error::EmptyInterior
                | Error::DimensionMismatch(_)
                | Error::NotInterior
                | Error::NotTransverse(_)
                | Error::DimensionUnsupported { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
