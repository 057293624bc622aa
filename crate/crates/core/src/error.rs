use thiserror::Error;

/// Errors raised by the model-set, operator and spectral routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid point set: {0}")]
    InvalidPointSet(String),

    #[error("patch exhausted: translation length {shift} >= patch radius {radius}")]
    PatchExhausted { shift: f64, radius: f64 },

    #[error("point {0:?} is not a point of the patch")]
    NotInPatch(Vec<f64>),

    #[error("ball of radius {radius} around {center:?} leaves the patch")]
    BoundaryIncomplete { center: Vec<f64>, radius: f64 },

    #[error("no interior points at class radius {0}")]
    NoInteriorPoints(f64),

    #[error("invalid scheme: {0}")]
    InvalidScheme(String),

    #[error("degenerate basis: |det S| = {0:e}")]
    DegenerateBasis(f64),

    #[error("scheme has trivial internal space, no window is available")]
    NoWindow,

    #[error("conflicting values for patch class {0}")]
    ConflictingClass(String),

    #[error("invalid operator data: {0}")]
    InvalidOperator(String),

    #[error("symbolic convolution requires indicator kernels with unit weight")]
    UnsupportedConvolution,

    #[error("matrix is not Hermitian (deviation {0:e})")]
    NotHermitian(f64),

    #[error("matrix dimension {0} exceeds the dense solver limit")]
    TooLarge(usize),

    #[error("site {index} has non-positive weight {weight}")]
    NonPositiveWeight { index: usize, weight: f64 },

    #[error("periodic boundary requested without a periodicity lattice")]
    MissingPeriods,

    #[error("support exceeds patch: need radius {need}, patch has {have}")]
    SupportExceedsPatch { need: f64, have: f64 },

    #[error("measure has zero total mass")]
    ZeroMass,

    #[error("invalid plan: {0}")]
    InvalidPlan(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
