use thiserror::Error;

/// Errors raised while building or evaluating lifted structures.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("jet division by zero")]
    JetDivisionByZero,

    #[error("jet square root of non-positive value {0}")]
    JetNegativeRadicand(f64),

    #[error("cannot evaluate `{expr}` at t = {t}: {reason}")]
    Domain {
        expr: String,
        t: f64,
        reason: &'static str,
    },

    #[error("cannot parse family expression: {0}")]
    Parse(String),

    #[error("point {x:?} lies outside the conformal chart (1 + c|x|^2/4 = {factor})")]
    ChartDomain { x: Vec<f64>, factor: f64 },

    #[error("degenerate structure: {0}")]
    DegenerateStructure(String),

    #[error("integrability denominator vanishes at t = {t} (value {value:e})")]
    IntegrabilityDegenerate { t: f64, value: f64 },

    #[error("inadmissible structure at t = {t}: {reason}")]
    Inadmissible { t: f64, reason: String },

    #[error("singular metric coefficients at t = {t}: {reason}")]
    SingularCoefficients { t: f64, reason: &'static str },

    #[error("case-II structure is only defined for t > 0 (got t = {0})")]
    ZeroCovector(f64),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("zero tangent vector")]
    ZeroVector,

    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
