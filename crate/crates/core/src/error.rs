use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid cylinder: {0}")]
    InvalidCylinder(String),

    #[error("shrinking by h0 = {h0} leaves no interior (radius {radius}, duration {duration})")]
    ShrinkTooLarge { h0: f64, radius: f64, duration: f64 },

    #[error("{what} must be positive, got {value}")]
    NonPositive { what: &'static str, value: f64 },

    #[error("grid too coarse: {found} nodes per axis, need at least {needed}")]
    GridTooCoarse { needed: usize, found: usize },

    #[error("non-finite value at flat index {index}")]
    NonFinite { index: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid exponent set: {0}")]
    InvalidExponents(String),

    #[error("containment violated: {0}")]
    Containment(String),

    #[error("h = {h} is under-resolved by the grid (dx = {dx}, dt = {dt}; need h >= 2dx and h^2 >= 2dt)")]
    UnderResolved { h: f64, dx: f64, dt: f64 },

    #[error("regime (iii) needs the integrability exponent s")]
    MissingS,

    #[error("need at least {needed} points, got {found}")]
    TooFewPoints { needed: usize, found: usize },

    #[error("negative coefficient a = {value} at ({x_hint}, t = {t})")]
    NegativeWeight { value: f64, x_hint: f64, t: f64 },

    #[error("quadrature did not converge: estimated error {estimate} above tolerance {tol}")]
    QuadratureFailed { estimate: f64, tol: f64 },

    #[error("{0}")]
    InvalidArgument(String),
}
