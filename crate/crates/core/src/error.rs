use thiserror::Error;

/// Errors raised by the chemostat library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("substrate concentration must be nonnegative, got {0}")]
    NegativeSubstrate(f64),

    #[error("auxostat denominator s_in - s = {gap:e} is singular")]
    SingularDenominator { gap: f64 },

    #[error("non-finite state at step {step}")]
    Blowup { step: usize },

    #[error("positivity violated at step {step}: min f = {min:e} (reduce dt or the dilution rate)")]
    Positivity { step: usize, min: f64 },

    #[error("degenerate population: total biomass {0:e}")]
    DegeneratePopulation(f64),

    #[error("eigen solver did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("at t = {t}: {cause}")]
    AtTime { t: f64, cause: Box<Error> },
}

impl Error {
    pub(crate) fn at(self, t: f64) -> Self {
        match self {
            e @ Error::AtTime { .. } => e,
            e => Error::AtTime { t, cause: Box::new(e) },
        }
    }

    /// Time attached by the simulation loop, if any.
    pub fn time(&self) -> Option<f64> {
        match self {
            Error::AtTime { t, .. } => Some(*t),
            _ => None,
        }
    }

    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::AtTime { cause, .. } => cause.is_numerical(),
            Error::Config(_) => false,
            _ => true,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
