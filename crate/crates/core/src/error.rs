use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid stochastic kernel: {0}")]
    NotStochastic(String),

    #[error("column {column} sums to {sum}, expected 1")]
    ColumnSum { column: usize, sum: String },

    #[error("invalid prior: {0}")]
    InvalidPrior(String),

    #[error("invalid instance: {0}")]
    Instance(String),

    #[error("mechanism is not deterministic: {0}")]
    NotDeterministic(String),

    #[error("grain set violates its constraint: {0}")]
    Grain(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("solver cap exceeded: {variables} variables > cap {cap}")]
    SolverCap { variables: usize, cap: usize },

    #[error("enumeration cap exceeded: {0}")]
    EnumerationCap(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("schema violation at {path}: {message}")]
    Schema { path: String, message: String },

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }

    pub(crate) fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Schema { path: path.into(), message: message.into() }
    }
}
