use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A point fell within the exclusion radius of the Dirac string.
    #[error("point {point:?} at node {node} lies in the singular region of the potential")]
    SingularRegion { node: usize, point: [f64; 3] },

    #[error("run aborted: {rejected} of {samples} samples rejected ({rate:.3}% > 1%)", rate = 100.0 * *rejected as f64 / *samples as f64)]
    AbortedRun { rejected: usize, samples: usize },

    #[error("config{}: {message}", line.map(|l| format!(" line {l}")).unwrap_or_default())]
    Config { line: Option<usize>, message: String },

    #[error("csv {path}: {message}")]
    Csv { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// Same error with the node index replaced, for errors raised by a
    /// single-point evaluation inside a loop over nodes.
    pub(crate) fn at_node(self, node: usize) -> Self {
        match self {
            Error::SingularRegion { point, .. } => Error::SingularRegion { node, point },
            other => other,
        }
    }
}
