//! Error type shared across the pipeline.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Broad failure class, used by callers (the CLI) to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Invalid inputs, malformed files, broken invariants in data.
    Data,
    /// A solver or training run failed to produce a model.
    Training,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("recording `{recording}`: invalid span ({start_s}, {end_s}): {reason}")]
    InvalidSpan {
        recording: String,
        start_s: f64,
        end_s: f64,
        reason: String,
    },

    #[error("the {class} class is absent from the input")]
    ClassAbsent { class: &'static str },

    #[error("{name} must lie in (0, 1), got {value}")]
    InvalidFraction { name: &'static str, value: f64 },

    #[error("{context}: expected dimension {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("{context}: lengths differ ({left} vs {right})")]
    LengthMismatch {
        context: &'static str,
        left: usize,
        right: usize,
    },

    #[error("{context}: input is empty")]
    EmptyInput { context: &'static str },

    #[error("clip of {clip_len} samples is shorter than one frame ({frame_len} samples)")]
    ClipTooShort { clip_len: usize, frame_len: usize },

    #[error("non-finite value in {context}")]
    NonFinite { context: String },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("clip {index}: {source}")]
    AtClip {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("SVM solver did not converge after {passes} sweeps (KKT violation {kkt_violation:.3e})")]
    SvmNonConvergence { kkt_violation: f64, passes: usize },

    #[error("VAE training diverged at epoch {epoch}, batch {batch}: non-finite {term}")]
    VaeDiverged {
        epoch: usize,
        batch: usize,
        term: String,
    },

    #[error("no base model trained successfully")]
    NoModelsTrained,

    #[error("{path}: {reason}")]
    Format { path: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("wav: {0}")]
    Wav(#[from] hound::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Classifies the error for exit-code mapping.
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::SvmNonConvergence { .. }
            | Error::VaeDiverged { .. }
            | Error::NoModelsTrained => ErrorKind::Training,
            Error::AtClip { source, .. } => source.kind(),
            _ => ErrorKind::Data,
        }
    }

    pub(crate) fn at_clip(self, index: usize) -> Error {
        Error::AtClip {
            index,
            source: Box::new(self),
        }
    }
}
