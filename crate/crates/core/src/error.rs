use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("Fock cutoff must be at least 2, got {0}")]
    InvalidCutoff(usize),

    #[error("leakage tolerance must lie in (0, 1), got {0}")]
    InvalidLeakageTolerance(f64),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("operator is not Hermitian (max |M - M^dagger| = {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("state is not normalized (norm = {norm})")]
    NotNormalized { norm: f64 },

    #[error("zero vector cannot be normalized")]
    ZeroVector,

    #[error("truncated weight {weight:e} exceeds leakage tolerance {tol:e}")]
    Leakage { weight: f64, tol: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("degenerate qubit: gap epsilon vanishes")]
    DegenerateQubit,

    #[error("large-detuning precondition violated: |Delta| = {detuning:e} <= {threshold} * G = {bound:e}")]
    LargeDetuningViolated {
        detuning: f64,
        threshold: f64,
        bound: f64,
    },

    #[error("perturbative precondition violated: |Lambda| / max(|lambda_a|, |lambda_b|) = {ratio} < {threshold}")]
    NonPerturbative { ratio: f64, threshold: f64 },

    #[error("detuning Lambda vanishes under strategy {strategy}")]
    ZeroLambda { strategy: &'static str },

    #[error("strategy {strategy} has no real root for Lambda")]
    NoLambdaRoot { strategy: &'static str },

    #[error("strategy {strategy} is reserved and cannot be evaluated")]
    UnsupportedStrategy { strategy: &'static str },

    #[error("time grid invalid: {0}")]
    InvalidGrid(String),

    #[error("measurement outcome {outcome} on {subsystem} has zero probability")]
    ZeroProbability {
        subsystem: &'static str,
        outcome: usize,
    },

    #[error("outcome {outcome} outside the {subsystem} cutoff {cutoff}")]
    OutcomeOutOfRange {
        subsystem: &'static str,
        outcome: usize,
        cutoff: usize,
    },

    #[error("cutoff {cutoff} too small: {reason}")]
    CutoffTooSmall { cutoff: usize, reason: String },

    #[error("precondition failed: {0}")]
    Precondition(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
