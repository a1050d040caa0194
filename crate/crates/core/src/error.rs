use thiserror::Error;

/// Errors raised across the library.
///
/// Variants carry the offending indices or values so callers can report
/// exactly which precondition failed.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("cylinder radius must be finite and positive, got {0}")]
    InvalidRadius(f64),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("configuration needs at least one vortex")]
    Empty,

    #[error("position list has {points} entries but vorticity list has {vorticities}")]
    LengthMismatch { points: usize, vorticities: usize },

    #[error("vortex {0} has zero vorticity")]
    ZeroVorticity(usize),

    #[error("vortices {i} and {j} collide (quotient distance {distance:e})")]
    Collision { i: usize, j: usize, distance: f64 },

    #[error("point lies within {distance:e} of vortex {index}; the field is singular there")]
    SingularPoint { index: usize, distance: f64 },

    #[error("index {index} out of range for {len} vortices")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("lift is ambiguous: new sample is half a circumference from the previous one")]
    AmbiguousLift,

    #[error("configurations are not comparable: {0}")]
    Incomparable(&'static str),

    #[error("invalid partition: {0}")]
    InvalidPartition(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("integration step size underflow at t = {t}")]
    StepUnderflow { t: f64 },

    #[error("{what} did not converge after {iterations} iterations (last residual {residual:e})")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("no sign change on [{lo}, {hi}]")]
    NoBracket { lo: f64, hi: f64 },

    #[error("reduced Hamiltonian is singular at this split")]
    SingularSplit,
}

pub type Result<T> = std::result::Result<T, Error>;
