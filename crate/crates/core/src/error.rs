use core::fmt;

/// Errors raised by the clustering core.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Two inputs disagree on a dimension (object count, feature count, k, ...).
    ShapeMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    /// A matrix or vector contains NaN or an infinity.
    NonFinite { what: &'static str, index: usize },
    /// A structural invariant was violated by the caller.
    Invalid(&'static str),
    /// A cluster has no members where at least one is required.
    EmptyCluster(usize),
    /// A group has no members in the dataset.
    EmptyGroup(usize),
    /// The requested move is not allowed (would empty its source, or is a self-move).
    RejectedMove {
        object: usize,
        from: usize,
        to: usize,
    },
    /// Fewer distinct rows than requested centroids.
    Initialization { k: usize, distinct_rows: usize },
    /// The contrastive stopping rule hit a non-positive reference value.
    DegenerateObjective { what: &'static str, value: f64 },
    /// Index outside its valid range.
    OutOfRange {
        what: &'static str,
        index: usize,
        bound: usize,
    },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::ShapeMismatch {
                what,
                expected,
                found,
            } => write!(
                f,
                "shape mismatch in {what}: expected {expected}, found {found}"
            ),
            Error::NonFinite { what, index } => {
                write!(f, "non-finite value in {what} at flat index {index}")
            }
            Error::Invalid(msg) => write!(f, "invalid input: {msg}"),
            Error::EmptyCluster(c) => write!(f, "cluster {c} is empty"),
            Error::EmptyGroup(s) => write!(f, "group {s} has no members in the dataset"),
            Error::RejectedMove { object, from, to } => write!(
                f,
                "rejected move of object {object} from cluster {from} to cluster {to}"
            ),
            Error::Initialization { k, distinct_rows } => write!(
                f,
                "cannot pick {k} initial centroids from {distinct_rows} distinct rows"
            ),
            Error::DegenerateObjective { what, value } => {
                write!(f, "degenerate objective: {what} = {value}")
            }
            Error::OutOfRange { what, index, bound } => {
                write!(f, "{what} index {index} out of range (< {bound})")
            }
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
