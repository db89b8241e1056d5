//! Error type shared by all toolkit modules.

use thiserror::Error;

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, DynError>;

#[derive(Debug, Error)]
pub enum DynError {
    #[error("unknown system `{0}`")]
    UnknownSystem(String),
    #[error("unknown parameter `{param}` for system `{system}`")]
    UnknownParam { system: String, param: String },
    #[error("state has dimension {got}, system expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("step limit exceeded after {steps} steps at t = {t} (possible finite-time blow-up)")]
    StepLimitExceeded { steps: usize, t: f64 },
    #[error("state became non-finite at t = {t}")]
    NonFiniteState { t: f64 },
    #[error("iteration failed to converge: {0}")]
    NoConvergence(String),
    #[error("singular Jacobian encountered: {0}")]
    SingularJacobian(String),
    #[error("matrix is not Hurwitz: eigenvalue with Re = {re}")]
    NotHurwitz { re: f64 },
    #[error("spectral split ill-conditioned: eigenvalue {value} within {tol} of the boundary")]
    IllConditionedSplit { value: f64, tol: f64 },
    #[error("homological operator singular at degree {degree} (resonance obstruction)")]
    ResonanceObstruction { degree: usize },
    #[error("Taylor order {got} outside supported range [{min}, {max}]")]
    OrderTooHigh { got: usize, min: usize, max: usize },
    #[error("orbit did not return to the section within t = {t_max}")]
    NoReturn { t_max: f64 },
    #[error("crossing is tangential: |<f, n>| = {speed}")]
    TangentialCrossing { speed: f64 },
    #[error("periodic-orbit search collapsed to an equilibrium (|f(x)| = {residual})")]
    CollapsedToEquilibrium { residual: f64 },
    #[error("period-doubling cascade lost at level {level}: {reason}")]
    CascadeLost { level: usize, reason: String },
    #[error("map is not at flip criticality: derivative = {derivative}")]
    NotCritical { derivative: f64 },
    #[error("branch continuation lost at lambda = {lambda}: {reason}")]
    BranchLost { lambda: f64, reason: String },
    #[error("Newton polygon support is empty")]
    EmptySupport,
    #[error("bifurcation coefficients are degenerate: {0}")]
    Degenerate(String),
    #[error("strong resonance: mu^{j} = 1 within tolerance")]
    StrongResonance { j: u32 },
    #[error("small divisor: omega = {omega} is within {tol} of 0 (mod 2 pi)")]
    SmallDivisor { omega: f64, tol: f64 },
    #[error("no limit cycle found at parameter {lambda}")]
    NoCycleFound { lambda: f64 },
    #[error("amplitude law fit is poor: R^2 = {r2}")]
    PoorFit { r2: f64 },
    #[error("point cloud is degenerate (zero diameter)")]
    DegenerateCloud,
    #[error("itinerary depth {got} exceeds float-mode cap {cap}")]
    DepthTooLarge { got: usize, cap: usize },
    #[error("invalid symbol word: {0}")]
    InvalidWord(String),
    #[error("orbit escaped (norm > {bound})")]
    Escaped { bound: f64 },
    #[error("exact arithmetic unavailable: {0}")]
    ExactUnavailable(String),
    #[error("config error at {pointer}: {message}")]
    SchemaViolation { pointer: String, message: String },
    #[error("usage error: {0}")]
    Usage(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
