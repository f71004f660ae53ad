use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// Row and column are 1-based positions among the data rows.
    #[error("entry at row {row}, column {col} is not -1 or 1")]
    NonBinaryEntry { row: usize, col: usize },

    #[error("row {row} has {found} entries, expected {expected}")]
    RaggedRows {
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("design has no rows")]
    Empty,

    #[error(
        "design needs at least {min_runs} runs and {min_factors} factor(s), got {runs}x{factors}"
    )]
    TooSmall {
        runs: usize,
        factors: usize,
        min_runs: usize,
        min_factors: usize,
    },

    #[error("invalid factor subset {subset:?} for a design with {factors} factors")]
    BadSubset { subset: Vec<usize>, factors: usize },

    #[error("model space too large to enumerate: {0}")]
    TooLarge(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("N = {runs} is not congruent to 2 mod 4")]
    BadCongruence { runs: usize },

    #[error("unknown fixture `{0}`")]
    UnknownFixture(String),

    #[error("malformed information matrix: {0}")]
    BadInfoMatrix(String),

    #[error("inconsistent information-matrix listing: {0}")]
    InconsistentListing(String),

    #[error("malformed manifest line {line}: {reason}")]
    Manifest { line: usize, reason: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
