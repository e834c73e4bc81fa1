use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Caller supplied something outside an operation's domain.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("eigen solver did not converge after {iterations} operator applications (residual {residual:.3e})")]
    EigenNoConvergence {
        iterations: usize,
        residual: f64,
        best_value: f64,
        best_vector: Vec<f64>,
    },

    #[error("training failed at iteration {iteration}: {source}")]
    Training {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    /// An internal invariant was violated; indicates a bug rather than bad input.
    #[error("internal consistency error: {0}")]
    Logic(String),

    #[error("failed to parse {path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("failed to load model: {0}")]
    ModelLoad(String),

    #[error("run {run}: {source}")]
    Run {
        run: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// True when the failure came from the numerics rather than the data.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::EigenNoConvergence { .. } | Error::Logic(_) => true,
            Error::Training { source, .. } | Error::Run { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}
