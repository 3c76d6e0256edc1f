use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("x = {x} lies outside [{a}, {b}]")]
    Domain { x: f64, a: f64, b: f64 },

    #[error("invalid problem definition: {0}")]
    InvalidProblem(String),

    #[error("cannot parse problem file: {0}")]
    Parse(String),

    #[error("step size underflow at x = {x} (h = {h:e})")]
    StepUnderflow { x: f64, h: f64 },

    #[error("integration budget exhausted at x = {x} after {steps} steps")]
    TooManySteps { x: f64, steps: usize },

    #[error("auxiliary eigenvalue search failed in [{lo}, {hi}]")]
    AuxiliarySearch { lo: f64, hi: f64 },

    #[error("contour passes through a zero of D on side {side} of {rect}")]
    ContourThroughZero { side: &'static str, rect: String },

    #[error("integrity failure: {0}")]
    Integrity(String),

    #[error("not supported: {0}")]
    NotSupported(String),

    #[error("QR iteration did not converge ({deflated} of {n} eigenvalues deflated)")]
    QrNoConvergence { deflated: usize, n: usize },

    #[error("inventory is not certified: {0}")]
    Uncertified(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
