use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("grid too coarse: estimated error {estimate:.3e} exceeds tolerance {tol:.3e}")]
    GridTooCoarse { estimate: f64, tol: f64 },
    #[error("tolerance not met: error {estimate:.3e} > {tol:.3e} after {panels} panels")]
    TolNotMet { estimate: f64, tol: f64, panels: usize },
    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),
    #[error("not a critical point: |phase'(x0)| = {0:.3e}")]
    NotCritical(f64),
    #[error("degenerate critical point: phase''(x0) = {0:.3e}")]
    Degenerate(f64),
    #[error("Besov window unstable: relative change {0:.3e} after widening")]
    WindowUnstable(f64),
    #[error("mode-sum tail unstable: tail bound {tail:.3e} at mode cap {cap}")]
    TailUnstable { tail: f64, cap: usize },
    #[error("time below stationary-phase threshold: t = {t} < T = {threshold}")]
    BelowThreshold { t: f64, threshold: f64 },
    #[error("decay fit rejected: {0}")]
    FitRejected(String),
    #[error("zero denominator: {0}")]
    ZeroDenominator(String),
    #[error("point outside the amplitude support: x = {0}")]
    OutOfSupport(f64),
    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),
    #[error("exponents not admissible: {0}")]
    NotAdmissible(String),
    #[error("serialization: {0}")]
    Serde(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidParam(_) | Error::Serde(_) | Error::NotAdmissible(_) => 2,
            _ => 3,
        }
    }
}
