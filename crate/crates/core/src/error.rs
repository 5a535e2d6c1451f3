use thiserror::Error;

use crate::lti::Domain;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A transfer function was evaluated at (or numerically on top of) a pole.
    #[error("evaluation at a pole: |den(x)| = {0:e}")]
    PoleHit(f64),

    #[error("domain mismatch: {0} vs {1}")]
    DomainMismatch(Domain, Domain),

    #[error("expected a degree-2 polynomial, got degree {0}")]
    Degree(usize),

    /// The point sits on the pole of the s <-> z substitution itself.
    #[error("mapping singularity: |denominator| = {0:e}")]
    MapSingularity(f64),

    #[error("logarithm of z = 0 is undefined")]
    Origin,

    #[error("out of domain: {0}")]
    OutOfDomain(String),

    #[error("invalid parameter: {0}")]
    Param(String),

    #[error("cannot normalize biquad: |b2| = {0:e}")]
    Normalization(f64),

    #[error("empty input")]
    EmptyInput,

    #[error("numeric overflow at sample {index}: value {value:e}")]
    NumericOverflow { index: usize, value: f64 },

    #[error(
        "response not settled: consecutive windows differ by {relative_change:.3e} (relative)"
    )]
    NotSettled { relative_change: f64 },

    /// Two independent computations of the same quantity disagree.
    #[error("inconsistent results: {0}")]
    Inconsistent(String),

    #[error("invalid measurement window: {0}")]
    Window(String),
}
