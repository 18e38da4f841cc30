use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),
    #[error("enumeration overflow: more than {limit} vectors within the requested radius")]
    EnumerationOverflow { limit: usize },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("invalid group: {0}")]
    InvalidGroup(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("matrix is not in the flat-metric cone of the group: {0}")]
    NotIsometricAction(String),
    #[error("no rational invariant splitting found: {0}")]
    IrreducibleUnexpected(String),
    #[error("character sum for eigenvalue {eigenvalue} is not an integer ({value})")]
    NonIntegerMultiplicity { eigenvalue: String, value: String },
    #[error("incomplete input spectrum: {0}")]
    IncompleteInput(String),
    #[error("comparison undecidable at {bits} bits: {what}")]
    UndecidableComparison { bits: u32, what: String },
    #[error("combined scalar curvature is not positive (lambda <= lambda_0)")]
    NonPositiveScal,
    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),
    #[error("budget exhausted: {0}")]
    BudgetExhausted(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
