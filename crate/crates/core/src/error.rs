use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("index {value} out of bounds for mode {mode} (size {size})")]
    IndexOutOfBounds {
        mode: usize,
        value: usize,
        size: usize,
    },

    #[error("index has {got} modes, tensor has {expected}")]
    OrderMismatch { expected: usize, got: usize },

    #[error("invalid shape: {0}")]
    InvalidShape(String),

    #[error("invalid count {0}: counts must be finite and non-negative")]
    InvalidCount(f64),

    #[error("tensor is empty")]
    EmptyTensor,

    #[error("tensor is not binary: found stored value {0}")]
    NotBinary(f64),

    #[error("invalid record: {0}")]
    InvalidRecord(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("invalid rank {0}: must be at least 1")]
    InvalidRank(usize),

    #[error("invalid option: {0}")]
    InvalidOption(String),

    #[error("shape mismatch: {left:?} vs {right:?}")]
    ShapeMismatch {
        left: alloc::vec::Vec<usize>,
        right: alloc::vec::Vec<usize>,
    },

    #[error("smoothing guarantee violated: {0}")]
    NonPositiveRate(String),

    #[error("invalid rate {0}: must be positive and finite")]
    InvalidRate(f64),

    #[error("single-class labels: no {0} examples")]
    SingleClass(&'static str),

    #[error("degenerate data: {0}")]
    Degenerate(String),

    #[error("scenario unsatisfiable: {0}")]
    Unsatisfiable(String),

    #[error("rank {rank}: {source}")]
    AtRank {
        rank: usize,
        #[source]
        source: alloc::boxed::Box<Error>,
    },

    #[error("record {index}: {source}")]
    AtRecord {
        index: usize,
        #[source]
        source: alloc::boxed::Box<Error>,
    },
}
