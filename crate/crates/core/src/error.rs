use thiserror::Error;

/// Broad failure classes. The CLI maps these to exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Parse,
    Precondition,
    Numerical,
}

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("missing parameter: {0}")]
    MissingParameter(&'static str),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not diagonalizable within tolerance (kappa_S = {kappa:e})")]
    NonDiagonalizable { kappa: f64 },
    #[error("function is not finite at eigenvalue {index}")]
    FunctionSingularAtEigenvalue { index: usize },
    #[error("resolvent is singular (sigma_min = {sigma_min:e})")]
    SingularResolvent { sigma_min: f64 },
    #[error("target condition number {target} is below 1")]
    UnreachableKappa { target: f64 },
    #[error("eigendecomposition did not converge")]
    DecompositionFailed,

    #[error("contour region is empty")]
    EmptyRegion,
    #[error("strip bound {bound} is tangent to the circle of radius {radius}")]
    DegenerateChord { bound: f64, radius: f64 },
    #[error("contour is not closed (gap {gap:e})")]
    OpenContour { gap: f64 },
    #[error("contour does not enclose eigenvalue {index}")]
    NotEnclosed { index: usize },

    #[error("non-finite function sample on the contour")]
    NonFiniteSample,
    #[error("quadrature node {k} lies on the spectrum")]
    NodeOnSpectrum { k: usize },
    #[error("required node count {required:e} exceeds cap {cap}")]
    Overflow { required: f64, cap: usize },

    #[error("polynomial degree {degree} exceeds cap {cap}")]
    DegreeCapExceeded { degree: usize, cap: usize },
    #[error("polynomial certification failed: sup error {sup_error:e}, max abs {max_abs}")]
    CertificationFailed { sup_error: f64, max_abs: f64 },
    #[error("matrix norm {norm} exceeds one")]
    NormExceedsOne { norm: f64 },
    #[error("singular value {index} = {sigma:e} lies outside [delta, 1]")]
    SingularValueOutOfRange { index: usize, sigma: f64 },
    #[error("inverse certificate {value:e} exceeds epsilon' = {eps_prime:e}")]
    CertificateViolated { value: f64, eps_prime: f64 },

    #[error("alpha = {alpha} is below the operator norm {norm}")]
    AlphaTooSmall { alpha: f64, norm: f64 },
    #[error("block-encoding verification failed (residual {residual:e})")]
    VerificationFailed { residual: f64 },
    #[error("success probability {probability:e} is numerically zero")]
    ZeroSuccessProbability { probability: f64 },
    #[error("target output norm {norm:e} vanishes")]
    VanishingOutput { norm: f64 },
    #[error("output distance {distance:e} exceeds epsilon = {epsilon:e}")]
    AccuracyNotMet { distance: f64, epsilon: f64 },

    #[error("matrix is not Hermitian (residual {residual:e})")]
    NotHermitian { residual: f64 },
    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),
    #[error("bound violated: lhs {lhs:e} > rhs {rhs:e}")]
    BoundViolated { lhs: f64, rhs: f64 },
    #[error("stability condition violated: {0}")]
    StabilityViolated(String),
    #[error("matrix A is singular")]
    SingularA,
    #[error("unknown study: {0}")]
    UnknownStudy(String),
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        use Error::*;
        match self {
            Parse(_) | UnknownStudy(_) => ErrorClass::Parse,
            InvalidParameter(_)
            | MissingParameter(_)
            | DimensionMismatch { .. }
            | NonDiagonalizable { .. }
            | UnreachableKappa { .. }
            | EmptyRegion
            | DegenerateChord { .. }
            | OpenContour { .. }
            | NotEnclosed { .. }
            | NodeOnSpectrum { .. }
            | NormExceedsOne { .. }
            | SingularValueOutOfRange { .. }
            | AlphaTooSmall { .. }
            | NotHermitian { .. }
            | HypothesisViolated(_)
            | StabilityViolated(_)
            | SingularA => ErrorClass::Precondition,
            FunctionSingularAtEigenvalue { .. }
            | SingularResolvent { .. }
            | DecompositionFailed
            | NonFiniteSample
            | Overflow { .. }
            | DegreeCapExceeded { .. }
            | CertificationFailed { .. }
            | CertificateViolated { .. }
            | VerificationFailed { .. }
            | ZeroSuccessProbability { .. }
            | VanishingOutput { .. }
            | AccuracyNotMet { .. }
            | BoundViolated { .. } => ErrorClass::Numerical,
        }
    }

    /// Stable identifier used in machine-readable error records.
    pub fn kind(&self) -> &'static str {
        use Error::*;
        match self {
            Parse(_) => "ParseError",
            InvalidParameter(_) => "InvalidParameter",
            MissingParameter(_) => "MissingParameter",
            DimensionMismatch { .. } => "DimensionMismatch",
            NonDiagonalizable { .. } => "NonDiagonalizable",
            FunctionSingularAtEigenvalue { .. } => "FunctionSingularAtEigenvalue",
            SingularResolvent { .. } => "SingularResolvent",
            UnreachableKappa { .. } => "UnreachableKappa",
            DecompositionFailed => "DecompositionFailed",
            EmptyRegion => "EmptyRegion",
            DegenerateChord { .. } => "DegenerateChord",
            OpenContour { .. } => "OpenContour",
            NotEnclosed { .. } => "NotEnclosed",
            NonFiniteSample => "NonFiniteSample",
            NodeOnSpectrum { .. } => "NodeOnSpectrum",
            Overflow { .. } => "Overflow",
            DegreeCapExceeded { .. } => "DegreeCapExceeded",
            CertificationFailed { .. } => "CertificationFailed",
            NormExceedsOne { .. } => "NormExceedsOne",
            SingularValueOutOfRange { .. } => "SingularValueOutOfRange",
            CertificateViolated { .. } => "CertificateViolated",
            AlphaTooSmall { .. } => "AlphaTooSmall",
            VerificationFailed { .. } => "VerificationFailed",
            ZeroSuccessProbability { .. } => "ZeroSuccessProbability",
            VanishingOutput { .. } => "VanishingOutput",
            AccuracyNotMet { .. } => "AccuracyNotMet",
            NotHermitian { .. } => "NotHermitian",
            HypothesisViolated(_) => "HypothesisViolated",
            BoundViolated { .. } => "BoundViolated",
            StabilityViolated(_) => "StabilityViolated",
            SingularA => "SingularA",
            UnknownStudy(_) => "UnknownStudy",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
