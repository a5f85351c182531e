use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("unknown factor `{0}`")]
    UnknownFactor(String),

    #[error("factor `{factor}` has no observations at level `{level}`")]
    EmptyLevel { factor: String, level: String },

    #[error("interest columns lie in the span of the nuisance columns (rank {full} < {expected})")]
    ConfoundedDesign { full: usize, expected: usize },

    #[error("non-finite value in {0}")]
    NonFiniteInput(&'static str),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("alpha = {alpha} removes no vectors out of {count}; increase alpha or the permutation count")]
    AlphaTooSmall { alpha: f64, count: usize },

    #[error("unknown table `{0}` (expected one of t1..t6)")]
    UnknownTable(String),

    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("grid error: {0}")]
    Grid(String),

    #[error("duplicate id `{0}`")]
    DuplicateId(String),

    #[error("id mismatch: {0}")]
    IdMismatch(String),

    #[error("column `{0}` mixes numeric and non-numeric values")]
    MixedColumn(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
