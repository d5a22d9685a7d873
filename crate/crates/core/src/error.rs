use thiserror::Error;

/// Errors raised while reading an instance file.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("line {line}: malformed dimension line {text:?}, expected `n <count>`")]
    MalformedDimension { line: usize, text: String },
    #[error("missing `n <count>` line")]
    MissingDimension,
    #[error("instance has {n} vertices, at least 3 are required")]
    TooSmall { n: usize },
    #[error("line {line}: expected {expected} fields, found {found}")]
    RowLength { line: usize, expected: usize, found: usize },
    #[error("expected {expected} matrix rows, found {found}")]
    RowCount { expected: usize, found: usize },
    #[error("line {line}: invalid field {text:?}")]
    InvalidField { line: usize, text: String },
    #[error("line {line}: negative entry {value} at ({row}, {col})")]
    NegativeEntry { line: usize, row: usize, col: usize, value: i64 },
    #[error("line {line}: INF outside the diagonal at ({row}, {col})")]
    InfOffDiagonal { line: usize, row: usize, col: usize },
    #[error("`symmetric` directive but costs ({row}, {col}) and ({col}, {row}) differ")]
    NotSymmetric { row: usize, col: usize },
}

/// Errors raised by the solver operations.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("size mismatch: {left} vs {right}")]
    SizeMismatch { left: usize, right: usize },
    #[error("not a permutation of 1..{n}: {detail}")]
    NotAPermutation { n: usize, detail: String },
    #[error("vertex {0} is out of range")]
    VertexOutOfRange(usize),
    #[error("tour repeats or misses vertices: {0}")]
    InvalidTour(String),
    #[error("permutation fixes vertex {0}, whose diagonal cost is unavailable")]
    FixedPoint(usize),
    #[error("cycle uses the unavailable entry ({0}, {1})")]
    UnavailableEntry(usize, usize),
    #[error("cycle repeats vertex {0}")]
    RepeatedVertex(usize),
    #[error("no rotation keeps every prefix sum within the bound")]
    NoDeterminingVertex,
    #[error("vertices {0} and {1} lie in the same cycle")]
    SameCycle(usize, usize),
    #[error("matchings share the edge {{{0}, {1}}}")]
    SharedEdge(usize, usize),
    #[error("invalid matching: {0}")]
    InvalidMatching(String),
    #[error("cycle is not acceptable for this matching: {0}")]
    NotAcceptable(String),
    #[error("half-cycle tour needs one point from every pair: {0}")]
    NotHalfCycle(String),
    #[error("paths have different endpoints")]
    EndpointMismatch,
    #[error("instance too large for {method}: n = {n}, limit {limit}")]
    TooLarge { method: &'static str, n: usize, limit: usize },
    #[error("descent exceeded {0} iterations")]
    IterationLimit(usize),
    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

pub type Result<T> = std::result::Result<T, Error>;
