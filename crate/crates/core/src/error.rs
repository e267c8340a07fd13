use thiserror::Error;

/// Errors raised by the numerical kernel, the geometric routines, the
/// policies and the simulation harness.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("linearly dependent input: {0}")]
    DependentInput(String),

    #[error("singular linear system (pivot {pivot:e} below {threshold:e})")]
    SingularSystem { pivot: f64, threshold: f64 },

    #[error("unsupported region representation: {0}")]
    UnsupportedRepresentation(String),

    #[error("sampling failure: accepted {accepted} of {draws} draws")]
    SamplingFailure { accepted: usize, draws: usize },

    #[error("inconsistent feedback: {0}")]
    InconsistentFeedback(String),

    #[error("cone is not pointed: aperture {0} is not below pi/2")]
    NotPointed(f64),

    #[error("degenerate cut: projected difference has norm {0:e}")]
    DegenerateCut(f64),

    #[error("unsupported dimension {got} (expected {expected})")]
    UnsupportedDimension { expected: String, got: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("internal invariant violated: {0}")]
    InternalInvariant(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("verification failed: {0}")]
    Verification(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Process exit status used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Verification(_) | Error::InconsistentFeedback(_) => 2,
            Error::Config(_)
            | Error::Io(_)
            | Error::UnsupportedDimension { .. }
            | Error::UnsupportedRepresentation(_)
            | Error::InvalidInput(_)
            | Error::DimensionMismatch(_)
            | Error::NotPointed(_) => 3,
            _ => 4,
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
        Error::Io(format!("json: {e}"))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
