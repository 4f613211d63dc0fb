//! Error types shared by all modules.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("point or time outside the flow domain: {0}")]
    OutOfDomain(String),

    #[error("grid too coarse to form a finite-difference stencil: {0}")]
    GridTooCoarse(String),

    #[error("time step rejected: residual tolerance unreachable at minimum step {min_step:e}")]
    StepRejected { min_step: f64 },

    #[error("curvature exceeded the configured ceiling {ceiling:e} at tau={tau}")]
    BlowUp { tau: f64, ceiling: f64 },

    #[error("curve does not match the flow domain: {0}")]
    DomainMismatch(String),

    #[error("degenerate curve: consecutive samples coincide at s={0}")]
    DegenerateCurve(f64),

    #[error("minimization did not converge after {iters} iterations (best value {best})")]
    NoConvergence { iters: usize, best: f64 },

    #[error("quadrature tail estimate {tail:e} exceeds tolerance {tol:e}")]
    TailNotNegligible { tail: f64, tol: f64 },

    #[error("reduced distance non-smooth at the requested point (stencil disagreement {0:e})")]
    NonSmoothPoint(f64),

    #[error("diffeomorphism maps a sample outside the grid: {0}")]
    PullbackUndefined(String),

    #[error("gluing failed at junction tau={tau}: residual {residual:e}")]
    GluingFailure { tau: f64, residual: f64 },

    #[error("comparison-curve endpoints do not match at junction {0}")]
    EndpointMismatch(usize),

    #[error("alpha must lie in (0,1), got {0}")]
    AlphaOutOfRange(f64),

    #[error("least-squares system is ill-conditioned")]
    IllConditioned,

    #[error("operation unsupported for this geometry: {0}")]
    Unsupported(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
