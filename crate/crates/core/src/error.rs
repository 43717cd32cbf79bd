use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid config field `{field}`: {message}")]
    Parse { field: String, message: String },
    #[error("invalid config field `{field}`: {reason}")]
    Invalid { field: String, reason: String },
}

impl ConfigError {
    /// The config key the error is about, if one is known.
    pub fn field(&self) -> Option<&str> {
        match self {
            ConfigError::Io { .. } => None,
            ConfigError::Parse { field, .. } | ConfigError::Invalid { field, .. } => Some(field),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ChannelError {
    #[error("distance must be positive, got {0} m")]
    NonPositiveDistance(f64),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ClusteringError {
    #[error("point set is empty")]
    EmptyBlock,
    #[error("point sets overlap")]
    Overlap,
    #[error("cluster count {m} out of range 1..={n}")]
    ClusterCount { m: usize, n: usize },
    #[error("exhaustive enumeration over {n} base stations exceeds the cap of {cap}")]
    Capacity { n: usize, cap: usize },
    #[error("not a partition of 0..{n}: {reason}")]
    InvalidPartition { n: usize, reason: String },
    #[error("not a proper clustering: {0}")]
    ImproperClustering(String),
}

#[derive(Debug, Error, PartialEq)]
pub enum AllocError {
    #[error("matrix for band {band} is not Hermitian positive definite")]
    NotPositiveDefinite { band: usize },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("infeasible allocation: {0}")]
    Infeasible(String),
    #[error("water-level bisection did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },
}

/// Top-level error for pipelines that cross module boundaries.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Clustering(#[from] ClusteringError),
    #[error(transparent)]
    Alloc(#[from] AllocError),
    #[error("inconsistent inputs: {0}")]
    Usage(String),
    #[error("cannot write results: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot write results: {0}")]
    Csv(#[from] csv::Error),
    #[error("cannot encode results: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
