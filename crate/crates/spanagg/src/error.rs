//! Error type shared by the whole engine.

/// Errors produced by the library.
///
/// The coarse categories map onto process exit codes in the CLI: domain and
/// empty-relation errors exit with 2, capacity errors with 3, unsupported
/// requests with 4, everything else with 1.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    /// A position, span, or numeric argument is out of range.
    #[error("range error: {0}")]
    Range(String),

    /// Mismatched semirings, variable sets, or missing variables.
    #[error("type error: {0}")]
    Type(String),

    /// An invalid ref-word (variable opened or closed the wrong number of
    /// times, or closed before opened).
    #[error("invalid ref-word: {0}")]
    Validity(String),

    /// An automaton that is not functional where functionality is required.
    #[error("automaton is not functional: {0}")]
    Functionality(String),

    /// Structural defects such as epsilon-cycles.
    #[error("structure error: {0}")]
    Structure(String),

    /// Min/Max/Average/Quantile were asked about an empty relation.
    #[error("empty relation: the spanner extracts no tuples from this document")]
    EmptyRelation,

    /// A tuple fell outside the weight function's domain (a tropical weight
    /// automaton has no run for it).
    #[error("domain error: {0}")]
    Domain(String),

    /// A guard was exceeded (too many tuples or too large a search space).
    #[error("capacity error: {0}")]
    Capacity(String),

    /// The requested computation is declared out of scope.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// Malformed textual input (regex, rational, JSON).
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
