use thiserror::Error;

/// Failures raised by the library. Soft conditions that still yield a value
/// are reported through [`Flag`] instead.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("basis is numerically singular")]
    DegenerateBasis,
    #[error("basis is not unimodular: det = {0}")]
    NotUnimodular(f64),
    #[error("enumeration budget of {cap} vectors exceeded")]
    EnumerationBudgetExceeded { cap: usize },
    #[error("generator matrix has rank below {k}")]
    RankDeficient { k: usize },
    #[error("diagonal action leaves the slice: tau = {0:?}")]
    LeavesSlice(Vec<f64>),
    #[error("calibration unstable: {0}")]
    CalibrationUnstable(String),
    #[error("covering grid would need {cells} cells (budget {budget})")]
    GridBudgetExceeded { cells: f64, budget: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Non-fatal events attached to a returned value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
pub enum Flag {
    /// A generator matrix was replaced by its primitive hull.
    SaturationApplied,
    /// A τ-grid selection came out empty.
    EmptySet,
    /// The ψ density gate passed but some ℰ ∩ Ω was empty.
    EmptyMinSet,
    /// No monomial passed the ε-gate; the maximum defaulted to 0.
    EmptyMax,
    /// A monomial with vanishing weight-one part produced the blow-up sentinel.
    Sentinel,
    /// A quadrature stratum stayed non-finite after subdivision.
    NonFinite,
    /// An integrand vanished on every quadrature node.
    DegenerateSupport,
    /// Result comes from a heuristic, not an exact decision.
    Heuristic,
    /// Horocycle steps were below the float spacing of the slice coordinate.
    BelowFloatResolution,
}
