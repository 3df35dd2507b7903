use thiserror::Error;

/// Every failure the library can report. The `code()` strings are stable and
/// appear in CLI reports.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("bad-factorization: {0}")]
    BadFactorization(String),
    #[error("not-hermitian: max |m - m^dagger| = {0:.3e}")]
    NotHermitian(f64),
    #[error("near-singular: eigenvalue {0:.3e} below threshold")]
    NearSingular(f64),
    #[error("null-superposition: coherent sum has vanishing norm")]
    NullSuperposition,
    #[error("pointer-too-small: pointer dimension {pointer_dim} < {outcomes} outcomes")]
    PointerTooSmall { pointer_dim: usize, outcomes: usize },
    #[error("dim-mismatch: expected {expected}, got {found}")]
    DimMismatch { expected: usize, found: usize },
    #[error("ic-construction-failed: no well-conditioned frame for d={0} after retries")]
    IcConstructionFailed(usize),
    #[error("not-informationally-complete: {0}")]
    NotInformationallyComplete(String),
    #[error("not-classical-measurement: {0}")]
    NotClassicalMeasurement(String),
    #[error("map-broke-state: {0}")]
    MapBrokeState(String),
    #[error("bad-exponent: gamma = {0}")]
    BadExponent(f64),
    #[error("bad-branch-weights: {0}")]
    BadBranchWeights(String),
    #[error("not-a-state-vector: {0}")]
    NotAStateVector(String),
    #[error("not-equivalent-input: pair {index} differs by {gap:.3e} before the map")]
    NotEquivalentInput { index: usize, gap: f64 },
    #[error("empty-search-space: {0}")]
    EmptySearchSpace(String),
    #[error("invalid-matrix: {0}")]
    InvalidMatrix(String),
    #[error("invalid-state: {0}")]
    InvalidState(String),
    #[error("invalid-weights: {0}")]
    InvalidWeights(String),
    #[error("invalid-povm: {0}")]
    InvalidPovm(String),
    #[error("invalid-map: {0}")]
    InvalidMap(String),
    #[error("invalid-config: {0}")]
    InvalidConfig(String),
    #[error("io: {0}")]
    Io(String),
}

impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Error::BadFactorization(_) => "bad-factorization",
            Error::NotHermitian(_) => "not-hermitian",
            Error::NearSingular(_) => "near-singular",
            Error::NullSuperposition => "null-superposition",
            Error::PointerTooSmall { .. } => "pointer-too-small",
            Error::DimMismatch { .. } => "dim-mismatch",
            Error::IcConstructionFailed(_) => "ic-construction-failed",
            Error::NotInformationallyComplete(_) => "not-informationally-complete",
            Error::NotClassicalMeasurement(_) => "not-classical-measurement",
            Error::MapBrokeState(_) => "map-broke-state",
            Error::BadExponent(_) => "bad-exponent",
            Error::BadBranchWeights(_) => "bad-branch-weights",
            Error::NotAStateVector(_) => "not-a-state-vector",
            Error::NotEquivalentInput { .. } => "not-equivalent-input",
            Error::EmptySearchSpace(_) => "empty-search-space",
            Error::InvalidMatrix(_) => "invalid-matrix",
            Error::InvalidState(_) => "invalid-state",
            Error::InvalidWeights(_) => "invalid-weights",
            Error::InvalidPovm(_) => "invalid-povm",
            Error::InvalidMap(_) => "invalid-map",
            Error::InvalidConfig(_) => "invalid-config",
            Error::Io(_) => "io",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::InvalidConfig(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimMismatch { expected, found })
    }
}
