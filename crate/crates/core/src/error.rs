use thiserror::Error;

/// Errors raised by the simulation and estimation routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A model or process parameter violates one of its invariants.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The innovation family has no closed-form characteristic function.
    #[error("unsupported innovation family: {0}")]
    UnsupportedFamily(String),

    /// The Fourier inversion integrand is not integrable (or cannot be
    /// truncated to the requested tolerance).
    #[error("integrability failure: {reason} (minimal valid horizon: {min_k:?})")]
    Integrability { reason: String, min_k: Option<usize> },

    /// A computation would exceed its resource cap.
    #[error("resource limit: {0}")]
    Resource(String),

    /// Too few samples or replications for the requested statistic.
    #[error("insufficient statistical power: {0}")]
    StatisticalPower(String),

    /// A zero-energy sum was requested for a function with nonzero integral.
    #[error("zero-energy gate violated: |integral| = {0:e}")]
    ZeroEnergyViolation(f64),

    /// A bracketing builder cannot reach the requested accuracy.
    #[error("bracket refinement needed: {0}")]
    RefinementNeeded(String),

    /// A moment or norm integral does not converge.
    #[error("divergent integral: {0}")]
    Divergence(String),

    /// The support set is empty at the requested threshold.
    #[error("empty support set at epsilon = {0}")]
    EmptySupport(f64),

    /// The request lies outside the implemented range of results.
    #[error("out of scope: {0}")]
    OutOfScope(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

pub(crate) fn domain_err(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
