use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported wavelet family `{0}` (expected haar, db2..db10 or sym2..sym10)")]
    UnsupportedFamily(String),

    #[error("dyadic table would need {entries} entries, above the cap of {cap}")]
    TableTooLarge { entries: usize, cap: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("need at least {min} observations, got {n}")]
    TooFewPoints { n: usize, min: usize },

    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("invalid resolution levels: {0}")]
    InvalidLevels(String),

    #[error("no active translations: degenerate bounding box")]
    EmptyTranslations,

    #[error("model has zero coefficient norm")]
    ZeroNorm,

    #[error("empty candidate set: {0}")]
    EmptyCandidates(String),

    #[error("quadrature error estimate {estimate:.3e} exceeds tolerance {tolerance:.3e}")]
    QuadratureTooCoarse { estimate: f64, tolerance: f64 },

    #[error("coordinate {0} has zero variance")]
    DegenerateCoordinate(usize),

    #[error("unknown density `{0}`")]
    UnknownDensity(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("numerical failure: {0}")]
    Numeric(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("replicate {index}: {source}")]
    Replicate {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by how the program was invoked rather than by
    /// the data.
    pub fn is_usage(&self) -> bool {
        match self {
            Error::UnsupportedFamily(_)
            | Error::InvalidLevels(_)
            | Error::EmptyCandidates(_)
            | Error::UnknownDensity(_)
            | Error::InvalidParameter(_) => true,
            Error::Replicate { source, .. } => source.is_usage(),
            _ => false,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
