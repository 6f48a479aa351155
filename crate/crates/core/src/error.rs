use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("point is not on the boundary: |rho| = {residual:e} exceeds tolerance {tolerance:e}")]
    NotOnBoundary { residual: f64, tolerance: f64 },

    #[error("point lies outside the closed domain: rho = {rho:e}")]
    OutsideDomain { rho: f64 },

    #[error("gradient of the defining function vanishes (|grad| = {norm:e})")]
    VanishingGradient { norm: f64 },

    #[error("second fundamental form is not positive semi-definite: eigenvalue {eigenvalue:e} below -{tolerance:e}")]
    NotConvex { eigenvalue: f64, tolerance: f64 },

    #[error("parameter point {point:?} lies outside the parameter ball of radius {radius}")]
    OutsideParameterBall { point: Vec<f64>, radius: f64 },

    #[error("pullback form is singular at {point:?} (min eigenvalue {min_eigenvalue:e})")]
    SingularForm { point: Vec<f64>, min_eigenvalue: f64 },

    #[error("no positive radius found for the positivity estimate (patch degenerate; re-stratify)")]
    NoPositiveRadius,

    #[error("minimizer is not interior (|y| = {norm}, ball radius {radius})")]
    MinimizerNotInterior { norm: f64, radius: f64 },

    #[error("quadrature did not converge: achieved error {achieved:e}, requested {requested:e}")]
    QuadratureNotConverged { achieved: f64, requested: f64 },

    #[error("unsupported catalog entry: {0}")]
    UnsupportedCatalog(String),
}
