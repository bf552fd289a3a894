use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("point lies inside the contour")]
    InteriorPoint,
    #[error("point lies outside the contour")]
    ExteriorPoint,
    #[error("point is within one grid spacing of the contour")]
    NearBoundary,
    #[error("coincident points")]
    CoincidentPoints,
    #[error("{what} did not converge: residual {residual:e} after {iterations} iterations")]
    NonConvergence { what: &'static str, residual: f64, iterations: usize },
    #[error("area is not positive ({0:e}); map is not univalent")]
    NonpositiveArea(f64),
    #[error("origin is not inside the contour")]
    OriginOutside,
    #[error("map is not univalent: {0}")]
    UnivalenceFailure(String),
    #[error("Newton iterate lost univalence: {0}")]
    UnivalenceLost(String),
    #[error("Laurent tail too large: last term {last:e} exceeds {tol:e}")]
    TailTooLarge { last: f64, tol: f64 },
    #[error("imaginary part of the period matrix is nearly degenerate (min eigenvalue {0:e})")]
    DegenerateImOmega(f64),
    #[error("theta value {0:e} is on the theta divisor")]
    OnThetaDivisor(f64),
    #[error("window {window} is below the required minimum {minimum}")]
    WindowTooSmall { window: usize, minimum: usize },
    #[error("point is a lattice point")]
    LatticePoint,
    #[error("{what}: routes disagree by {residual:e} (tolerance {tol:e})")]
    RouteMismatch { what: &'static str, residual: f64, tol: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
