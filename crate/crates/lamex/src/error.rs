use thiserror::Error;

/// Failure modes shared across the toolkit.
///
/// Numerical routines distinguish between domain violations (the caller asked
/// for something outside the validity region of a formula) and convergence
/// failures (a quadrature or iteration exhausted its budget). The two must not
/// be conflated: the former is a caller bug, the latter a tolerance problem.
#[derive(Debug, Error)]
pub enum Error {
    #[error("ellipticity violated: mu = {mu}, 2*mu + lambda = {p_modulus}, required floor delta0 = {delta0}")]
    EllipticityViolation {
        mu: f64,
        p_modulus: f64,
        delta0: f64,
    },

    #[error("fractional exponent s = {0} outside (0, 1]")]
    InvalidExponent(f64),

    #[error("zero spatial frequency: the rotation route needs a direction to align")]
    DegenerateFrequency,

    #[error("quadrature did not converge: {0}")]
    QuadratureFailure(String),

    #[error("argument outside domain: {0}")]
    DomainError(String),

    #[error("order {0} is an integer; only non-integer orders are supported")]
    OrderError(f64),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("precondition violated: {0}")]
    PreconditionViolation(String),

    #[error("parse error: {0}")]
    ParseError(String),

    #[error("invalid configuration: {0}")]
    ValidationError(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
