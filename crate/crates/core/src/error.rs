use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("empty input: {0}")]
    Empty(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("neighborhood size k={k} must satisfy 1 <= k <= n-1 (n={n})")]
    InvalidNeighborCount { k: usize, n: usize },

    #[error("supplied metric is not symmetric at ({i}, {j})")]
    NonSymmetricMetric { i: usize, j: usize },

    #[error("point {index} has a zero k-th neighbor distance (duplicate points)")]
    ZeroScale { index: usize },

    #[error("node {node} has zero degree")]
    ZeroDegree { node: usize },

    #[error("node index {node} out of range for {n} nodes")]
    NodeOutOfRange { node: usize, n: usize },

    #[error("eigensolver did not converge: residual {residual:e}")]
    EigenNonConvergence { residual: f64 },

    #[error("Poisson mean {mean:e} exceeds the sampling guard of 1e8")]
    SamplingGuard { mean: f64 },

    #[error("{0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
