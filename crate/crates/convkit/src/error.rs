use crate::selector::Algorithm;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Convolution or pooling parameters violate an invariant.
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    /// Tensor shapes disagree with each other or with the parameters.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// Matrix dimensions do not allow the requested product.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// An element or flop count does not fit in the counter type.
    #[error("arithmetic overflow while computing {0}")]
    Overflow(&'static str),

    /// The algorithm cannot run with these parameters.
    #[error("algorithm {algorithm} is incompatible with parameters {params}")]
    IncompatibleAlgorithm { algorithm: Algorithm, params: String },

    /// A line of a config or selector-table file failed to parse.
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    /// A report is missing a required column.
    #[error("missing column `{0}` in report header")]
    MissingColumn(String),

    /// Buffer allocation failed for a benchmark configuration.
    #[error("allocation failed for {0}")]
    Resource(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
