use thiserror::Error;

/// Crate-wide error type. Variants are named after the contract they guard.
#[derive(Debug, Error)]
pub enum Error {
    #[error("diffusion exponents are degenerate: |m1+m2-m1*m2| = {0:e} is below 1e-14")]
    DegenerateExponents(f64),
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
    #[error("profiles live on different grids")]
    GridMismatch,
    #[error("profile is identically zero")]
    ZeroProfile,
    #[error("invalid objective specification: {0}")]
    InvalidSpec(String),
    #[error("argument out of range: {0}")]
    OutOfRange(String),
    #[error("exponent pair is the intersection point (m*, m*); quantity undefined there")]
    IntersectionPoint,
    #[error("operation requires the intersection point m1 = m2 = m*")]
    IntersectionRequired,
    #[error("exponent regime does not match the requested criterion: {0}")]
    RegimeMismatch(String),
    #[error("initial data support exceeds r_max/2: {0}")]
    SupportTooLarge(String),
    #[error("masses are subcritical (Sigma = {0} <= 1); negative-energy construction not guaranteed")]
    SubcriticalMasses(f64),
    #[error("solver configuration invalid: {0}")]
    ConfigInvalid(String),
    #[error("state became non-finite at t = {0}")]
    NonFiniteState(f64),
}

pub type Result<T> = std::result::Result<T, Error>;
