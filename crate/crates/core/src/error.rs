use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Broad category of a failure, used by the CLI and the C ABI to pick exit
/// codes and status values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Inputs violate a documented invariant.
    Validation,
    /// The numerics cannot proceed (zero partition function, all-zero
    /// message, non-primitive loop matrix, ...).
    Numerical,
    /// I/O or schema problems.
    Io,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimensions: {0}")]
    Dimension(String),

    #[error("invalid model: {}", .0.join("; "))]
    InvalidModel(Vec<String>),

    #[error("observation {symbol} at node {node} is out of range (alphabet of {num_symbols} symbols)")]
    ObservationOutOfRange {
        node: usize,
        symbol: usize,
        num_symbols: usize,
    },

    #[error("enumeration of {states} configurations exceeds the cap of {cap}")]
    CapExceeded { states: u128, cap: u64 },

    #[error("partition function is zero: every configuration has zero weight")]
    ZeroPartition,

    #[error("nonpositive entry at index {index}: Hilbert distance is undefined on the cone boundary")]
    Boundary { index: usize },

    #[error("matrix has a nonpositive entry at ({row}, {col}); a strictly positive matrix is required")]
    NotStrictlyPositive { row: usize, col: usize },

    #[error("matrix has a negative entry at ({row}, {col})")]
    NegativeEntry { row: usize, col: usize },

    #[error("matrix is not primitive: {0}")]
    NotPrimitive(String),

    #[error("matrix is not symmetric: {0}")]
    NotSymmetric(String),

    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("matrix is singular: {0}")]
    Singular(String),

    #[error("{direction} message on edge {from}->{to} vanished (all-zero update)")]
    DegenerateMessage {
        direction: &'static str,
        from: usize,
        to: usize,
    },

    #[error("belief at node {node} vanished (all-zero product)")]
    DegenerateBelief { node: usize },

    #[error("joint table is not strictly positive: {0}")]
    NonPositiveTable(String),

    #[error("degenerate decomposition: {0}")]
    Degenerate(String),

    #[error("matrix is defective (not diagonalizable within tolerance)")]
    Defective,

    #[error("operation requires alphabet size 2, got {0}")]
    NotBinary(usize),

    #[error("block constraint violated at k = {k}: {what}")]
    BlockConstraint { k: usize, what: String },

    #[error("pairwise and blanket constructions disagree on edges {0:?}")]
    MethodDisagreement(Vec<(usize, usize)>),

    #[error("schema error at {path}: {message}")]
    Schema { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Dimension(_)
            | Error::InvalidModel(_)
            | Error::ObservationOutOfRange { .. }
            | Error::NegativeEntry { .. }
            | Error::NotSymmetric(_)
            | Error::BlockConstraint { .. }
            | Error::NotBinary(_) => ErrorKind::Validation,
            Error::Schema { .. } | Error::Io(_) => ErrorKind::Io,
            _ => ErrorKind::Numerical,
        }
    }
}
