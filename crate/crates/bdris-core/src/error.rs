//! Crate-wide error type.

use thiserror::Error;

/// Errors raised by model construction and the optimizers.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Matrix or vector dimensions do not conform.
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: String,
        got: String,
    },

    /// A declared structural flag (lossless, matched, reciprocal, ...) fails
    /// beyond the allowed tolerance.
    #[error("{what} violated: residual {residual:.3e} exceeds tolerance {tol:.3e}")]
    ToleranceViolated {
        what: &'static str,
        residual: f64,
        tol: f64,
    },

    /// A feedback loop through the amplifiers makes (I - Φ_AA A) singular or
    /// numerically unusable.
    #[error("unstable amplifier loop: condition number {cond:.3e} exceeds cap {cap:.3e}")]
    UnstableAmplifierLoop { cond: f64, cap: f64 },

    /// The multiport system matrix (I - SΓ) or a transmit-side matrix is
    /// singular: the network is resonant or unstable.
    #[error("resonant/unstable network: {context} is singular")]
    SingularSystem { context: &'static str },

    /// A channel group has zero norm, so the alignment direction is undefined.
    #[error("group {group} has a zero-norm channel vector; alignment undefined")]
    ZeroNormGroup { group: usize },

    /// A scalar parameter is outside its admissible range.
    #[error("invalid parameter {name}: {message}")]
    InvalidParameter { name: &'static str, message: String },

    /// The bisection search could not bracket the multiplier.
    #[error("bisection bracket not found: constraint value {value:.3e} still above budget {budget:.3e} at mu = {mu_max:.3e}")]
    BisectionBracket { value: f64, budget: f64, mu_max: f64 },

    /// The RIS scattering matrix alone exceeds the amplification budget.
    #[error("theta consumes entire amplification budget: sigma_I^2 ||Theta||_F^2 = {consumed:.3e} > P_A = {budget:.3e}")]
    ThetaBudgetExceeded { consumed: f64, budget: f64 },

    /// Problem size beyond the dense-solver guardrail.
    #[error("problem too large: QCQP vector dimension {dim} exceeds cap {cap}")]
    ProblemTooLarge { dim: usize, cap: usize },

    /// The iterative optimizer did not converge; the trace is attached for
    /// diagnosis.
    #[error("optimizer did not converge within {iters} iterations; last rates {tail:?}")]
    NonConvergence { iters: usize, tail: Vec<f64> },
}

/// Convenience alias used across the crate.
pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn dims(context: &'static str, expected: impl Into<String>, got: impl Into<String>) -> Self {
        Error::DimensionMismatch {
            context,
            expected: expected.into(),
            got: got.into(),
        }
    }
}
