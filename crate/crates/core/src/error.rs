use alloc::string::String;

/// Every failure the engine can report.
///
/// Variants are grouped by the stage that raises them so that session
/// error events can name the stage without extra bookkeeping.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("degenerate embedding: zero norm or non-finite entries")]
    DegenerateEmbedding,
    #[error("embedding dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("no enrollments: {0}")]
    NoEnrollments(String),
    #[error("unknown speaker `{0}`")]
    UnknownSpeaker(String),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("invalid segment `{id}`: {reason}")]
    InvalidSegment { id: String, reason: String },
    #[error("invalid reference: {0}")]
    InvalidReference(String),
    #[error("out-of-order segment `{id}`: start {start} precedes {previous}")]
    OutOfOrder { id: String, start: f64, previous: f64 },
    #[error("unknown segment `{0}`")]
    UnknownSegment(String),
    #[error("DER undefined: reference contains no scored speech")]
    UndefinedDer,
    #[error("relative improvement undefined: baseline {0} is zero")]
    UndefinedImprovement(&'static str),
    #[error("degenerate sample: {0}")]
    DegenerateSample(&'static str),
    #[error("too many speakers for exact mapping: {0}")]
    TooManySpeakers(usize),
    #[error("message does not start with the wake word")]
    WakeWordMissing,
    #[error("could not parse correction output: {0}")]
    ParseFailure(String),
    #[error("invalid correction directive: {0}")]
    InvalidDirective(String),
    #[error("correction target not found (best token F1 {best_f1:.3})")]
    TargetNotFound { best_f1: f64 },
    #[error("stale correction: segment `{id}` is labeled `{current}`, not `{expected}`")]
    StaleCorrection {
        id: String,
        expected: String,
        current: String,
    },
    #[error("correction limit reached")]
    BudgetExhausted,
    #[error("gateway failure: {0}")]
    Gateway(String),
    #[error("audit log inconsistent at logical index {index}: {reason}")]
    AuditMismatch { index: u64, reason: String },
    #[error("generation failed: {0}")]
    Generation(String),
}

impl Error {
    /// Pipeline stage label used in session error events.
    pub fn stage(&self) -> &'static str {
        match self {
            Error::WakeWordMissing => "gate",
            Error::ParseFailure(_) | Error::InvalidDirective(_) | Error::Gateway(_) => "parse",
            Error::TargetNotFound { .. } => "locate",
            Error::StaleCorrection { .. } | Error::BudgetExhausted => "apply",
            Error::OutOfOrder { .. } | Error::InvalidSegment { .. } => "segment",
            _ => "engine",
        }
    }
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
