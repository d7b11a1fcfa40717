use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("numerical inconsistency: {0}")]
    NumericalConsistency(String),
    #[error("conditioning on a null event (probability {0:e})")]
    ConditioningOnNull(f64),
    #[error("unknown outcome `{0}`")]
    UnknownOutcome(String),
    #[error("syntax error at position {position}: {message}")]
    Syntax { position: usize, message: String },
    #[error("incomplete query: {0}")]
    IncompleteQuery(String),
    #[error("label `{0}` is not bound in the scenario")]
    UnboundLabel(String),
    #[error("final measurement `{0}` has no effect binding")]
    FinalWithoutEffect(String),
    #[error("ambiguous structure: {0}")]
    AmbiguousStructure(String),
    #[error("missing policy: {0}")]
    MissingPolicy(String),
    #[error("POVM violation: {0}")]
    PovmViolation(String),
    #[error("null combinator: {0}")]
    NullCombinator(String),
    #[error("arity error: {0}")]
    Arity(String),
    #[error("resource limit exceeded: {0}")]
    Resource(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("scenario file: {0}")]
    ScenarioFile(String),
}
