use thiserror::Error;

/// Errors raised by the toolkit. Every variant names the violated condition.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("interval [{m}, {big_m}] is degenerate")]
    DegenerateInterval { m: f64, big_m: f64 },

    #[error("no tangent point: f'(m) = {fprime_m}, f'(M) = {fprime_big_m}, chord slope = {slope}")]
    NoTangentPoint {
        fprime_m: f64,
        fprime_big_m: f64,
        slope: f64,
    },

    #[error("envelope error {achieved:e} exceeds target {target:e}")]
    EpsNotAchievable { achieved: f64, target: f64 },

    #[error("domain violation: {0}")]
    DomainViolation(String),

    #[error("non-positive spectrum in {what}: min = {min}")]
    NonPositiveSpectrum { what: String, min: f64 },

    #[error("Kantorovich numerator mM^r - Mm^r vanished for m={m}, M={big_m}, r={r}")]
    KantorovichDegenerate { m: f64, big_m: f64, r: f64 },

    #[error("eigen-solver did not converge")]
    ConvergenceFailure,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("bad shape: {rows}x{cols}")]
    BadShape { rows: usize, cols: usize },

    #[error("matrix is not symmetric (residual {residual:e})")]
    NotSymmetric { residual: f64 },

    #[error("g is not positive on the sandwich spectrum (min eigenvalue {min})")]
    NonPositiveG { min: f64 },

    #[error("range sign condition failed: {0}")]
    RangeSignViolation(String),

    #[error("sign violation: {0}")]
    SignViolation(String),

    #[error("positivity violation: {0}")]
    PositivityViolation(String),

    #[error("Ky Fan index {ell} out of range 1..={dim}")]
    BadEll { ell: usize, dim: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for errors that mean an instance fails a theorem's hypotheses
    /// rather than a malformed input or a numerical breakdown.
    pub fn is_precondition(&self) -> bool {
        matches!(
            self,
            Error::DomainViolation(_)
                | Error::NonPositiveSpectrum { .. }
                | Error::NonPositiveG { .. }
                | Error::RangeSignViolation(_)
                | Error::SignViolation(_)
                | Error::PositivityViolation(_)
                | Error::NoTangentPoint { .. }
        )
    }
}
