use thiserror::Error;

/// Every failure the toolkit reports. Messages are part of the public
/// contract: the CLI prints them verbatim and tests match on them.
#[derive(Debug, Error)]
pub enum Error {
    #[error("space mismatch")]
    SpaceMismatch,
    #[error("observation node has zero mass")]
    ZeroMassObservation,
    #[error("degenerate tangent basis")]
    DegenerateTangentBasis,
    #[error("operator numerically rank-zero")]
    RankZero,
    #[error("functional annihilated on tangent space")]
    Annihilated,
    #[error("representer has null-space mass")]
    NullSpaceMass,
    #[error("observation grid does not cover the data: {outside} of {n} observations fall outside it (at most 1% allowed)")]
    GridDoesNotCover { outside: usize, n: usize },
    #[error("kernel symmetry violated")]
    KernelAsymmetric,
    #[error("representer requires absolutely continuous r")]
    NotAbsolutelyContinuous,
    #[error("no admissible discount candidate")]
    NoDiscountCandidate,
    #[error("path leaves the model: clipping at zero removes {clip:.3e} of the mass at t = {t}; choose smaller path parameters")]
    PathLeavesModel { t: f64, clip: f64 },
    #[error("grid must be even for harmonic oracle")]
    OddGrid,
    #[error("severely ill-posed measurement layer")]
    SeverelyIllPosed,
    #[error("functional not identified under this model")]
    NotIdentified,
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("malformed container: {0}")]
    Container(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn dims(msg: impl Into<String>) -> Self {
        Error::DimensionMismatch(msg.into())
    }

    /// True for the failures that mean "this functional is not identified"
    /// rather than "the computation broke".
    pub fn is_identification(&self) -> bool {
        matches!(
            self,
            Error::NullSpaceMass | Error::NotIdentified | Error::Annihilated
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
