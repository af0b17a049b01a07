use thiserror::Error;

/// Every failure the library reports. Variants follow the error classes named
/// by each module's preconditions.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum MhdError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("geometry error: {0}")]
    Geometry(String),
    #[error("resolution error: {0}")]
    Resolution(String),
    #[error("weight construction error: {0}")]
    Weight(String),
    #[error("shape error: expected length {expected}, got {got}")]
    Shape { expected: usize, got: usize },
    #[error("numerical error: {message} (residual {residual:.3e})")]
    Numerical { message: String, residual: f64 },
    #[error("equilibrium rejected: {0}")]
    Equilibrium(String),
    #[error("assembly error: {0}")]
    Assembly(String),
    #[error("commutator support leaks outside the transition band: {0:.3e}")]
    CommutatorLeak(f64),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("empty input: {0}")]
    Empty(String),
    #[error("actuator selection failed: {0}")]
    Actuator(String),
    #[error("system is uncontrollable: {0}")]
    Uncontrollable(String),
    #[error("projection error: {0}")]
    Projection(String),
    #[error("closed-loop instability: {0}")]
    Instability(String),
    #[error("fit error: {0}")]
    Fit(String),
}

pub type Result<T> = std::result::Result<T, MhdError>;

pub(crate) fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(MhdError::Shape { expected, got })
    }
}
