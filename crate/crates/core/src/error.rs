use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("singular pivot at elimination step {step}")]
    SingularPivot { step: usize },

    #[error("linear solve failed at time step {step}, picard iteration {iteration}: {reason}")]
    LinearSolve {
        step: usize,
        iteration: usize,
        reason: String,
    },

    #[error("non-finite values at time step {step}")]
    BlowUp { step: usize },

    #[error("picard iteration stalled at time step {step} after {iterations} iterations (error {error:e})")]
    PicardStalled { step: usize, iterations: usize, error: f64 },

    #[error("{path}:{line}: {key}: {message}")]
    Config {
        path: String,
        line: usize,
        key: String,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
