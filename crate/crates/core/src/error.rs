use alloc::string::String;

/// Errors raised by the compiler core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("table shape mismatch: {table} has {found} entries, expected {expected}")]
    ShapeMismatch {
        table: String,
        expected: usize,
        found: usize,
    },
    #[error("duplicate pairwise table for variables ({0}, {1})")]
    DuplicatePair(usize, usize),
    #[error("duplicate unary table for variable {0}")]
    DuplicateUnary(usize),
    #[error("variable index {index} out of range (N = {count})")]
    VariableOutOfRange { index: usize, count: usize },
    #[error("pairwise table references variable {0} twice")]
    SelfPair(usize),
    #[error("variable {0} has cardinality 0")]
    ZeroCardinality(usize),
    #[error("non-finite cost in {0}")]
    NonFinite(String),
    #[error("assignment has {found} entries, expected {expected}")]
    AssignmentLength { expected: usize, found: usize },
    #[error("choice {choice} out of range for variable {var} (cardinality {cardinality})")]
    ChoiceOutOfRange {
        var: usize,
        choice: usize,
        cardinality: usize,
    },
    #[error("custom assignment for variable {var}: {reason}")]
    InvalidAssignment { var: usize, reason: String },
    #[error("{what} needs {required} but the limit is {limit}")]
    Capacity {
        what: &'static str,
        required: usize,
        limit: usize,
    },
    #[error("spin vector has {found} entries, expected {expected}")]
    SpinLength { expected: usize, found: usize },
    #[error("spin entries must be +1 or -1, got {0}")]
    InvalidSpin(i8),
    #[error("qubit mask {mask:#x} exceeds {num_qubits} qubits")]
    QubitOutOfRange { mask: u64, num_qubits: usize },
    #[error("length {0} is not a power of two")]
    NotPowerOfTwo(usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("degenerate ensemble: every variance is zero")]
    DegenerateEnsemble,
}

impl Error {
    pub(crate) fn capacity(what: &'static str, required: usize, limit: usize) -> Self {
        Error::Capacity {
            what,
            required,
            limit,
        }
    }
}

pub type Result<T> = core::result::Result<T, Error>;
