use alloc::string::String;

/// Errors produced by the core pipeline operations.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("line {line}: malformed record: {reason}")]
    MalformedRecord { line: usize, reason: String },
    #[error("degenerate corpus: {0}")]
    DegenerateCorpus(String),
    #[error("test fraction must lie in (0, 1), got {0}")]
    InvalidFraction(f64),
    #[error("training data contains a single class")]
    SingleClass,
    #[error("optimizer diverged (non-finite loss)")]
    Diverged,
    #[error("AUC undefined: scores need both classes present")]
    AucUndefined,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("no matches for word `{0}`")]
    NoMatches(String),
    #[error("duplicate context id {0}")]
    DuplicateContext(u64),
    #[error("no embedding for context id {0}")]
    MissingEmbedding(u64),
    #[error("invalid vector for context id {0}: values must be finite and not all zero")]
    InvalidVector(u64),
    #[error("need at least {needed} rows, got {found}")]
    TooFewRows { needed: usize, found: usize },
    #[error("fold {fold} has no training rows of one class; try a smaller k")]
    FoldMissingClass { fold: usize },
    #[error("feature schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("missing input: {0}")]
    MissingInput(String),
    #[error("lexicon does not intersect the training vocabulary")]
    EmptyIntersection,
    #[error("group `{0}` is empty")]
    EmptyGroup(String),
    #[error("AUC undefined on single-class group `{0}`; use the accuracy metric")]
    SingleClassGroup(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = core::result::Result<T, Error>;
