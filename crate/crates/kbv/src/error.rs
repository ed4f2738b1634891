use thiserror::Error;

/// Crate-wide error type. Messages carry the originating module so CLI
/// failures point at the violated precondition.
#[derive(Debug, Error)]
pub enum Error {
    #[error("primes: sieve limit {limit} exceeds configured budget {budget}")]
    SieveBudget { limit: u64, budget: u64 },

    #[error("primes: prime window requires 2 <= lo <= hi <= n, got lo={lo}, hi={hi}, n={n}")]
    InvalidWindow { lo: f64, hi: f64, n: u64 },

    #[error("primes: {value} is not prime or exceeds n")]
    NotPrime { value: u64 },

    #[error("primes: mertens gap requires n >= 3, got {n}")]
    MertensRange { n: u64 },

    #[error("laws: law requires n >= 1")]
    EmptyRange,

    #[error("laws: pareto exponent must lie in [0, 1), got {s}")]
    ParetoExponent { s: String },

    #[error("laws: weight function must be nonnegative, got negative weight at k={k}")]
    NegativeWeight { k: u64 },

    #[error("laws: total mass is zero, cannot normalize")]
    ZeroMass,

    #[error("laws: custom-law CSV line {line}: {reason}")]
    CsvFormat { line: usize, reason: String },

    #[error("laws: mass index k={k} outside [1, {n}]")]
    MassIndex { k: u64, n: u64 },

    #[error("laws: duplicate mass entry for k={k}")]
    DuplicateMass { k: u64 },

    #[error("laws: hypothesis exponent t must be positive, got {t}")]
    NonPositiveT { t: String },

    #[error("laws: hypothesis constant kappa must be at least 1, got {kappa}")]
    KappaRange { kappa: String },

    #[error("laws: exponent {value} too large to evaluate exactly")]
    BadExponent { value: String },

    #[error("exact: law has n={law_n} but prime window has n={gamma_n}")]
    GammaMismatch { law_n: u64, gamma_n: u64 },

    #[error("exact: window size {size} exceeds exact-mode limit {limit} (raise --max-gamma)")]
    GammaTooLarge { size: usize, limit: usize },

    #[error("exact: n={n} exceeds exact-mode limit {limit} (raise --max-n)")]
    DenseLimit { n: u64, limit: u64 },

    #[error("exact: multiplicity support does not match the given divisor set")]
    SupportMismatch,

    #[error("exact: truncation order must be odd and within 1..=|window|, got {gamma} for window size {size}")]
    BadTruncationOrder { gamma: u32, size: usize },

    #[error("exact: partition thresholds must be nonnegative, got alpha={alpha}, beta={beta}")]
    BadPartitionThresholds { alpha: f64, beta: f64 },

    #[error("bounds: rho is undefined for windows with fewer than 2 primes (size {size})")]
    RhoUndefined { size: usize },

    #[error("bounds: bound requires rho > 1, got {rho}")]
    RhoTooSmall { rho: f64 },

    #[error("bounds: delta must lie in (0, t/3), got delta={delta} with t={t}")]
    DeltaRange { delta: f64, t: f64 },

    #[error("bounds: tail bound requires 0 < lambda < x, got lambda={lambda}, x={x}")]
    ChernoffRange { lambda: f64, x: f64 },

    #[error("apps: point process requires a_n >= 2, got {a_n}")]
    SmallIntensityBase { a_n: f64 },

    #[error("apps: process time must lie in [0, 1], got {t}")]
    BadProcessTime { t: f64 },

    #[error("apps: window of {size} primes exceeds exact-mode limit {limit} (truncate the window or raise --max-gamma)")]
    WindowTooLarge { size: usize, limit: usize },

    #[error("apps: experiment refused, law fails certification: {summary}")]
    CertificationFailed { summary: String },

    #[error("apps: gaussian scale must be positive, got {sigma}")]
    NonPositiveSigma { sigma: f64 },

    #[error("cli: {0}")]
    Usage(String),

    #[error("invariant violated: {0}")]
    InvariantViolation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
