use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PsError {
    #[error("zero denominator")]
    ZeroDenominator,
    #[error("cannot parse rational from {0:?}")]
    ParseRational(String),
    #[error("invalid preference order: {0}")]
    InvalidOrder(String),
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("inconsistent utilities for agent {agent}: {reason}")]
    InconsistentUtilities { agent: usize, reason: String },
    #[error("invalid assignment: {0}")]
    InvalidAssignment(String),
    #[error("agent {agent} out of range for {n} agents")]
    AgentOutOfRange { agent: usize, n: usize },
    #[error("enumeration bound exceeded: {what} needs {needed}, bound is {bound}")]
    BoundExceeded {
        what: &'static str,
        needed: String,
        bound: String,
    },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("malformed step list: {0}")]
    MalformedSteps(String),
    #[error("preflib line {line}: {kind}")]
    PrefLib { line: usize, kind: PrefLibErrorKind },
    #[error("{0}")]
    Config(String),
}

/// Reasons a PrefLib file is rejected.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PrefLibErrorKind {
    #[error("alternative {0} appears more than once")]
    DuplicateAlternative(usize),
    #[error("unknown alternative id {0}")]
    UnknownAlternative(String),
    #[error("multiplicity {0:?} is not a positive integer")]
    BadMultiplicity(String),
    #[error("order ranks {found} of {expected} alternatives")]
    IncompleteOrder { expected: usize, found: usize },
    #[error("unsupported data type {0:?}; only strict complete orders (soc) are accepted")]
    UnsupportedType(String),
    #[error("ties are not supported")]
    Tie,
    #[error("malformed line: {0}")]
    Malformed(String),
    #[error("missing number of alternatives")]
    MissingAlternativeCount,
}

pub type Result<T, E = PsError> = std::result::Result<T, E>;
