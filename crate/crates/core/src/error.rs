use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported dimension {dim}: at most {max} supported")]
    UnsupportedDimension { dim: usize, max: usize },

    #[error("duplicate points at indices {first} and {second}")]
    DuplicatePoint { first: usize, second: usize },

    #[error("degenerate box: dimension {dim} has zero width")]
    DegenerateBox { dim: usize },

    #[error("numerical conditioning: {0}")]
    NumericalConditioning(String),

    #[error("singular design matrix: {0}")]
    SingularDesign(String),

    #[error("solver failure: {0}")]
    SolverFailure(String),

    #[error("degenerate training set: {0}")]
    DegenerateTraining(String),

    #[error("empty sigma interval{}: {reason}", probe.map(|p| format!(" at probe {p}")).unwrap_or_default())]
    EmptyInterval { probe: Option<usize>, reason: String },

    #[error("point {index} has no neighbour within radius {radius}")]
    IsolatedPoint { index: usize, radius: f64 },

    #[error("evaluation failed at point {index}: {source}")]
    PointEvaluation {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// Innermost error, looking through [`Error::PointEvaluation`] wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::PointEvaluation { source, .. } => source.root(),
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
