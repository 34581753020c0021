use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A composition entry is not strictly positive.
    #[error("composition entry at row {row}, column {col} is {value}; entries must be > 0")]
    Domain { row: usize, col: usize, value: f64 },

    /// A composition row does not sum to one.
    #[error("composition row {row} sums to {sum}, off the simplex by more than {tolerance:e}")]
    Simplex { row: usize, sum: f64, tolerance: f64 },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("usage: {0}")]
    Usage(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("topology: {0}")]
    Topology(String),

    #[error("tuning failed: {0}")]
    Tuning(String),

    #[error("shard {shard}: {source}")]
    Shard {
        shard: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("malformed input: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short machine-readable category, stable across releases.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain { .. } => "domain",
            Error::Simplex { .. } => "simplex",
            Error::Shape(_) => "shape",
            Error::Parameter(_) => "parameter",
            Error::Usage(_) => "usage",
            Error::Numerical(_) => "numerical",
            Error::Topology(_) => "topology",
            Error::Tuning(_) => "tuning",
            Error::Shard { source, .. } => source.kind(),
            Error::Format(_) => "format",
            Error::Io(_) => "io",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
        }
    }
}
