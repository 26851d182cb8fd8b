use thiserror::Error;

/// Every failure the library can report.
///
/// Variants are grouped loosely by the stage that raises them. `is_input_error`
/// separates malformed requests from hypothesis or numerical failures.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    // numeric
    #[error("denominator vanishes at the origin")]
    DenominatorVanishesAtOrigin,
    #[error("root finder did not converge after {iterations} iterations (residual {residual:.3e})")]
    DidNotConverge { iterations: usize, residual: f64 },

    // recurrences
    #[error("order must be at least 1")]
    InvalidOrder,
    #[error("leading coefficient alpha_{{n,m}} vanishes at n = {n}")]
    DegenerateCoefficient { n: usize },
    #[error("initial conditions have length {got}, expected {expected}")]
    BadInitialConditions { expected: usize, got: usize },
    #[error("limit coefficients are not known for this recurrence")]
    LimitUnknown,
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("tail of the series is identically zero")]
    AllZeroTail,
    #[error("no zero of the limit polynomial lies on the estimated circle |z| = {radius:.6e}")]
    NoMatchingCircle { radius: f64 },

    // transforms
    #[error("scaling sequence vanishes at n = {n}")]
    ZeroGamma { n: usize },
    #[error("lambda is not a root of the characteristic polynomial at n = {n} (residual {residual:.3e})")]
    NotASolution { n: usize, residual: f64 },
    #[error("lambda is zero")]
    ZeroLambda,
    #[error("growth rate {mu:.6e} too close to |lambda| = {lambda_abs:.6e}")]
    ModulusCollision { mu: f64, lambda_abs: f64 },
    #[error("series too short for the requested truncation accuracy")]
    InsufficientTail,

    // fundamental system
    #[error("circles at radii {r1:.6e} and {r2:.6e} cannot be separated at the given tolerance")]
    AmbiguousGrouping { r1: f64, r2: f64 },
    #[error("principal part fit on |z| = {radius:.6e} is poor (relative residual {residual:.3e})")]
    PoorFit { radius: f64, residual: f64 },
    #[error("principal-part matrix is rank deficient on |z| = {radius:.6e} (rank {rank} < {expected})")]
    RankDeficient { radius: f64, rank: usize, expected: usize },
    #[error("pilot solution has a zero coefficient too close to the end of the data")]
    ZeroPilotCoefficient,
    #[error("circle hypothesis violated: {0}")]
    CircleHypothesisViolated(String),
    #[error("builder produced {produced} of {expected} members")]
    NonTermination { produced: usize, expected: usize },
    #[error("lifted solution failed verification: {0}")]
    LiftFailed(String),

    // Hermite-Pade
    #[error("series truncation {available} is shorter than the required {required}")]
    TruncationTooShort { required: usize, available: usize },
    #[error("limit of the denominators was not detected")]
    LimitNotDetected,
    #[error("independence window is too short: need n2 - n1 >= {required}")]
    WindowTooShort { required: usize },
    #[error("denominator coefficients degenerate for every shift")]
    DegenerateDenominators,
    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),
}

impl Error {
    /// Name of the variant, used as a stable key in reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "InvalidInput",
            Error::DenominatorVanishesAtOrigin => "DenominatorVanishesAtOrigin",
            Error::DidNotConverge { .. } => "DidNotConverge",
            Error::InvalidOrder => "InvalidOrder",
            Error::DegenerateCoefficient { .. } => "DegenerateCoefficient",
            Error::BadInitialConditions { .. } => "BadInitialConditions",
            Error::LimitUnknown => "LimitUnknown",
            Error::InsufficientData(_) => "InsufficientData",
            Error::AllZeroTail => "AllZeroTail",
            Error::NoMatchingCircle { .. } => "NoMatchingCircle",
            Error::ZeroGamma { .. } => "ZeroGamma",
            Error::NotASolution { .. } => "NotASolution",
            Error::ZeroLambda => "ZeroLambda",
            Error::ModulusCollision { .. } => "ModulusCollision",
            Error::InsufficientTail => "InsufficientTail",
            Error::AmbiguousGrouping { .. } => "AmbiguousGrouping",
            Error::PoorFit { .. } => "PoorFit",
            Error::RankDeficient { .. } => "RankDeficient",
            Error::ZeroPilotCoefficient => "ZeroPilotCoefficient",
            Error::CircleHypothesisViolated(_) => "CircleHypothesisViolated",
            Error::NonTermination { .. } => "NonTermination",
            Error::LiftFailed(_) => "LiftFailed",
            Error::TruncationTooShort { .. } => "TruncationTooShort",
            Error::LimitNotDetected => "LimitNotDetected",
            Error::WindowTooShort { .. } => "WindowTooShort",
            Error::DegenerateDenominators => "DegenerateDenominators",
            Error::HypothesisViolated(_) => "HypothesisViolated",
        }
    }

    /// True for malformed requests, false for hypothesis or numerical failures.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidInput(_)
                | Error::DenominatorVanishesAtOrigin
                | Error::InvalidOrder
                | Error::DegenerateCoefficient { .. }
                | Error::BadInitialConditions { .. }
                | Error::ZeroGamma { .. }
                | Error::ZeroLambda
                | Error::TruncationTooShort { .. }
                | Error::WindowTooShort { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
