use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong inside the library.
///
/// Variants fall in two families that the command-line front end maps to
/// distinct exit codes: input/validation problems and numeric failures.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    // -- validation --------------------------------------------------------
    #[error("polynomial has no coefficients")]
    EmptyPolynomial,
    #[error("non-finite coefficient {value} at index {index}")]
    NonFiniteCoefficient { index: usize, value: f64 },
    #[error("denominator is the zero polynomial")]
    ZeroDenominator,
    #[error("transfer function is improper: numerator degree {num} exceeds denominator degree {den}")]
    Improper { num: usize, den: usize },
    #[error("invalid order: {0}")]
    BadOrder(String),
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("step traces are sampled on different grids: {0}")]
    GridMismatch(String),
    #[error("polynomial constant term is {0}, expected 1")]
    NotNormalized(f64),

    // -- numeric -----------------------------------------------------------
    #[error("root finder did not converge within {iterations} iterations (worst residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("polynomial is not factorable into stability equations: {0}")]
    NotFactorable(String),
    #[error("polynomial has a zero constant term (pole at the origin)")]
    ZeroConstantTerm,
    #[error("system is unstable: {0}")]
    Unstable(String),
    #[error("feedback closure is degenerate (1 + GH vanishes identically)")]
    DegenerateLoop,
    #[error("transfer function has a pole at the origin")]
    PoleAtOrigin,
    #[error("transfer function has zero DC gain and cannot be normalized")]
    ZeroDcGain,
    #[error("numerator matching has no real solution: {detail} (discriminant {discriminant:e})")]
    MatchInfeasible { detail: String, discriminant: f64 },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("motor characteristic polynomial has complex roots (discriminant {discriminant:e})")]
    ComplexMotorPoles { discriminant: f64 },
    #[error("time constants violate Tr < T2 < T1 (Tr = {tr}, T2 = {t2}, T1 = {t1})")]
    TimeConstantOrdering { tr: f64, t2: f64, t1: f64 },
    #[error("no positive loop gain achieves the requested damping: {0}")]
    NoPositiveGain(String),
    #[error("damping condition has no real gain (discriminant {discriminant:e}, roots {roots:?})")]
    NoRealGain {
        discriminant: f64,
        /// Complex roots of the gain quadratic as (re, im) pairs.
        roots: Vec<(f64, f64)>,
    },
    #[error("response has not settled: {0}")]
    NotSettled(String),
    #[error("simulation diverged at t = {t}")]
    SimulationDiverged { t: f64 },
}

impl Error {
    /// True for malformed input or violated preconditions; false for numeric
    /// failures on otherwise well-formed input.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::EmptyPolynomial
                | Error::NonFiniteCoefficient { .. }
                | Error::ZeroDenominator
                | Error::Improper { .. }
                | Error::BadOrder(_)
                | Error::InvalidParameter { .. }
                | Error::InvalidArgument(_)
                | Error::GridMismatch(_)
                | Error::NotNormalized(_)
                | Error::ComplexMotorPoles { .. }
                | Error::TimeConstantOrdering { .. }
        )
    }

    pub(crate) fn param(name: &str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.to_string(),
            reason: reason.into(),
        }
    }
}
