use thiserror::Error;

/// Errors raised by the link model, the sampler and the optimizers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument fell outside the domain of the function.
    #[error("domain error: {0}")]
    Domain(String),

    /// Adaptive quadrature ran out of subdivisions before meeting its tolerance.
    #[error(
        "quadrature did not converge: estimated relative error {achieved:.3e} after {subdivisions} subdivisions"
    )]
    Quadrature { achieved: f64, subdivisions: usize },

    /// A jitter scale that must be positive is zero.
    #[error("degenerate jitter: {0}")]
    DegenerateJitter(String),

    /// Parameters land on a Gamma pole or in a region where a closed form diverges.
    #[error("parameter region: {0}")]
    ParameterRegion(String),

    /// Configuration could not be parsed or failed validation.
    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::Domain(msg()))
    }
}
