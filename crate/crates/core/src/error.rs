use alloc::string::String;

/// Errors raised by the core routines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("lattice step must be positive and finite, got {0}")]
    InvalidStep(f64),
    #[error("position {position} is not on the lattice {origin} + k*{step}")]
    OffLattice { position: f64, origin: f64, step: f64 },
    #[error("atom weight must be positive and finite, got {weight} at position {position}")]
    InvalidWeight { position: f64, weight: f64 },
    #[error("weights sum to {0}, expected 1")]
    WeightsNotNormalized(f64),
    #[error("law has no atoms")]
    EmptyLaw,
    #[error("gaussian variance must be nonnegative and finite, got {0}")]
    InvalidVariance(f64),
    #[error("lattice steps {0} and {1} are not commensurable")]
    Incommensurable(f64, f64),
    #[error("convolution needs {needed} lattice cells, above the cap of {cap}")]
    AtomCapExceeded { needed: u64, cap: u64 },
    #[error("probability {0} is outside (0, 1)")]
    ProbabilityOutOfRange(f64),
    #[error("moment generating function overflows at t = {t} (atom at {position})")]
    MgfOverflow { t: f64, position: f64 },
    #[error("law has nonzero mean {0}")]
    NonzeroMean(f64),
    #[error("law is degenerate (zero variance)")]
    Degenerate,
    #[error("lambda = {lambda} exceeds the largest admissible value {lambda_star}")]
    LambdaTooLarge { lambda: f64, lambda_star: f64 },
    #[error("E exp(lambda |X|) = {value} exceeds c1 = {c1}")]
    ExponentialMomentTooLarge { value: f64, c1: f64 },
    #[error("smoothness estimate needs a Gaussian component (gaussian_variance > 0)")]
    NoGaussianComponent,
    #[error("conditioning value {0} is outside the support of the sum")]
    OutsideSupport(f64),
    #[error("alpha coefficients ({alpha1}, {alpha2}) do not match the variance ratio")]
    AlphaMismatch { alpha1: f64, alpha2: f64 },
    #[error("invalid Haar index (k = {k}, j = {j})")]
    HaarIndex { k: u32, j: u64 },
    #[error("point {0} is outside [0, 1]")]
    OutsideUnitInterval(f64),
    #[error("truncation level must be at least 1")]
    TruncationLevel,
    #[error("holder constant must be positive, got {0}")]
    InvalidHolderConstant(f64),
    #[error("function failed Holder certification (modulus {modulus}, sup {sup}, L = {holder_constant})")]
    CertificationFailed { modulus: f64, sup: f64, holder_constant: f64 },
    #[error("blocking hypothesis violated: {0}")]
    BlockingHypothesis(String),
    #[error("root finding failed to bracket a solution")]
    NoBracket,
    #[error("{0} values supplied, expected {1}")]
    LengthMismatch(usize, usize),
    #[error("internal consistency check failed: {0}")]
    Internal(String),
}
