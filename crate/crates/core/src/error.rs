use thiserror::Error;

/// Errors surfaced by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// Input too small or otherwise degenerate (e.g. bandwidth from < 2 particles).
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    /// A parameter is outside its documented range.
    #[error("invalid parameter: {0}")]
    Parameter(String),
    /// Caller broke a shape or size contract.
    #[error("contract violation: {0}")]
    Contract(String),
    /// Non-finite state where a finite value is required.
    #[error("invalid state: {0}")]
    InvalidState(String),
    /// Not a valid rigid transform.
    #[error("geometry error: {0}")]
    Geometry(String),
    /// Rotation logarithm evaluated at or beyond the principal-branch cut.
    #[error("log branch: {0}")]
    Branch(String),
    /// Log-barrier value/gradient requested outside the feasible region.
    #[error("barrier domain: {0}")]
    BarrierDomain(String),
    /// Formulation/constraint combination that has no defined semantics.
    #[error("unsupported combination: {0}")]
    UnsupportedCombination(String),
    /// Rejection sampler gave up: the feasible set has (numerically) no mass.
    #[error("infeasible target: {0}")]
    InfeasibleTarget(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
