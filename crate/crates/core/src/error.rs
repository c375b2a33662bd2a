use thiserror::Error;

/// Errors raised by the simulation core.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("domain violation: {what} = {value} lies outside [-1, 1]")]
    Domain { what: &'static str, value: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("step size underflow at t = {t}")]
    StepSizeUnderflow { t: f64 },

    #[error("step limit of {max_steps} reached at t = {t}")]
    TooManySteps { t: f64, max_steps: usize },

    #[error("state left [-1, 1] at t = {t}: x[{node}] = {value}")]
    InvariantViolation { t: f64, node: usize, value: f64 },

    #[error("separatrix: constant profile (x0 = {x0} equals the interior equilibrium)")]
    Separatrix { x0: f64 },

    #[error("decay rate undefined: {0}")]
    DecayRate(String),

    #[error("penetration depth approximation is only defined for phi = 0 (got phi = {phi})")]
    BiasedDepth { phi: f64 },

    #[error("penetration depth diverges at x0 = 0")]
    DivergentDepth,

    #[error("stationary tail not converged: {found} of the required {required} points have eps < 1e-3; increase n")]
    TailNotConverged { found: usize, required: usize },

    #[error("no sustained propagation: {0}")]
    NoPropagation(String),

    #[error("no zero crossing: {0}")]
    NoCrossing(String),

    #[error("no homogeneous traveling wave exists for this edge{}: {reason}", edge.map(|e| format!(" (edge {e})")).unwrap_or_default())]
    NoHomogeneousWave { edge: Option<usize>, reason: String },

    #[error("speed table does not cover B = {b}, phi = {phi}")]
    TableRange { b: f64, phi: f64 },

    #[error("too few samples in window: {found} (need at least 3)")]
    TooFewSamples { found: usize },

    #[error("{excluded} of {total} realizations excluded at sigma = {sigma}; statistics meaningless")]
    ExcessiveExclusions { sigma: f64, excluded: usize, total: usize },

    #[error("invalid input document: {0}")]
    Document(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Failures caused by a pathway that does not carry a wave to its terminal node.
    pub fn is_propagation_failure(&self) -> bool {
        matches!(
            self,
            Error::NoPropagation(_)
                | Error::NoCrossing(_)
                | Error::TooFewSamples { .. }
                | Error::NoHomogeneousWave { .. }
        )
    }

    /// Failures of the numerical machinery itself.
    pub fn is_numerical_failure(&self) -> bool {
        matches!(self, Error::StepSizeUnderflow { .. } | Error::TooManySteps { .. } | Error::InvariantViolation { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
