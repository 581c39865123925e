use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("loss parameter p = {p} outside [0, 1)")]
    InvalidLoss { p: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    SizeMismatch { expected: usize, got: usize },

    #[error("site x = {x} outside ring -{n_half}..={n_half}")]
    SiteOutOfRange { x: i64, n_half: usize },

    #[error("eigensolver did not converge (worst relative residual {worst_residual:e})")]
    NotConverged { worst_residual: f64 },

    #[error("too few samples: got {got}, need at least {need}")]
    TooFewSamples { got: usize, need: usize },

    #[error("angle increment {increment:.4} rad at sample {index} too large; refine the grid")]
    RefinementNeeded { index: usize, increment: f64 },

    #[error("grid refinement exhausted at {n_k} points without a converged result")]
    RefinementExhausted { n_k: usize },

    #[error("topological phase boundary at (theta1, theta2) = ({theta1}, {theta2}): polar angle undefined")]
    PhaseBoundary { theta1: f64, theta2: f64 },

    #[error("per-band phase ill-defined for {class} spectrum")]
    ZakPhaseUndefined { class: String },

    #[error("no localized solution in this bulk/gap (|cosh 2 kappa| = {rhs} <= 1)")]
    NoLocalizedSolution { rhs: f64 },

    #[error("singular coin parameters: cos(theta1) cos(theta2) = 0")]
    SingularParameters,

    #[error("no edge state: {0}")]
    NoEdgeState(String),

    #[error("ring too small for decay rate {kappa}: exp(-2 kappa N) = {tail:e}")]
    RingTooSmall { kappa: f64, tail: f64 },

    #[error("edge-state construction inconsistent (eigen-residual {residual:e})")]
    ConstructionInconsistent { residual: f64 },

    #[error("probabilities not normalized (sum = {sum})")]
    Unnormalized { sum: f64 },
}

impl Error {
    /// Errors raised by the numerics rather than by caller input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NotConverged { .. }
                | Error::RefinementNeeded { .. }
                | Error::RefinementExhausted { .. }
                | Error::PhaseBoundary { .. }
                | Error::ZakPhaseUndefined { .. }
                | Error::NoLocalizedSolution { .. }
                | Error::SingularParameters
                | Error::NoEdgeState(_)
                | Error::RingTooSmall { .. }
                | Error::ConstructionInconsistent { .. }
        )
    }
}
