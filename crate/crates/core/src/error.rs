use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid piecewise-linear function: {0}")]
    InvalidPwl(String),
    #[error("convexity violated at x = {at}: {detail}")]
    ConvexityViolation { at: f64, detail: String },
    #[error("evaluation budget of {budget} exhausted")]
    BudgetExceeded { budget: usize },
    #[error("invalid step schedule: {0}")]
    InvalidSchedule(String),
    #[error("grid too sparse: {0}")]
    GridTooSparse(String),
    #[error("grid too narrow: membership probability {probability} at grid edge x = {at}")]
    GridTooNarrow { at: f64, probability: f64 },
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("no minimizer bracket supplied")]
    NoBracket,
    #[error("bracket [{lo}, {hi}] does not contain the minimizer")]
    BracketViolated { lo: f64, hi: f64 },
    #[error("function is not monotone on the bracket near x = {at}")]
    NotMonotone { at: f64 },
    #[error("level set is empty on the bracket")]
    EmptyLevelSet,
    #[error("minimum set is not a compact interval ({0})")]
    NoCompactMinSet(String),
    #[error("location equivalence violated at x = {0}")]
    EquivalenceViolation(String),
    #[error("tau enclosures disagree: reflected [{reflected_lo}, {reflected_hi}] vs direct [{direct_lo}, {direct_hi}]")]
    CrossCheckFailed {
        reflected_lo: f64,
        reflected_hi: f64,
        direct_lo: f64,
        direct_hi: f64,
    },
    #[error("stage {stage} failed: {reason}")]
    StageFailure { stage: usize, reason: String },
    #[error("invalid process model: {0}")]
    ModelInvalid(String),
    #[error("limit process does not have an a.s. unique minimizer (E[tau - sigma] = {gap})")]
    NonUniqueLimit { gap: f64 },
    #[error("parse error: {0}")]
    Parse(String),
}
