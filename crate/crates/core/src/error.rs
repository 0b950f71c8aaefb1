use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("implicit midpoint iteration did not converge at step {step} (t = {time})")]
    FixedPointDivergence { step: usize, time: f64 },

    #[error("momentum left the open unit bundle at step {step} (|p| = {norm})")]
    MomentumEscape { step: usize, norm: f64 },

    #[error("orbit does not close up to the deck transformation: gap {gap:e}")]
    ClosureViolation { gap: f64 },

    #[error("Newton shooting did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("shooting Jacobian is singular (condition number {condition:e})")]
    SingularJacobian { condition: f64 },

    #[error("construction failed: {clause}")]
    Construction { clause: String },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("audit failed: {0}")]
    Audit(String),

    #[error("indeterminate: {0}")]
    Indeterminate(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn construction(clause: impl Into<String>) -> Self {
        Error::Construction { clause: clause.into() }
    }
}
