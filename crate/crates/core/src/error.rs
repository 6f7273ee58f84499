use std::path::Path;

use thiserror::Error;

/// Errors raised anywhere in the toolkit.
///
/// Everything except [`Error::Io`] is a validation failure: the inputs were
/// readable but violated a format or domain invariant.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{source_name}:{line}: {msg}")]
    Parse {
        source_name: String,
        line: usize,
        msg: String,
    },

    #[error(
        "candidates for several keywords passed where one was expected ({expected} and {found})"
    )]
    MixedKeywords { expected: String, found: String },

    #[error("keyword {kw_id}: document {doc_id} has non-positive confidence mass {score}")]
    NonPositiveScore {
        kw_id: String,
        doc_id: String,
        score: f64,
    },

    #[error("keyword {kw_id}: no document ranking weight for document {doc_id}")]
    MissingDocWeight { kw_id: String, doc_id: String },

    #[error("keyword {kw_id}: trial duration {trial_seconds}s does not exceed the {n_true} true occurrences")]
    TrialTooShort {
        kw_id: String,
        n_true: usize,
        trial_seconds: f64,
    },

    #[error("no keyword has reference occurrences; nothing to score")]
    NoScoreableKeywords,

    #[error("sequence lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),

    #[error("need at least two observations, got {0}")]
    TooFewObservations(usize),

    #[error("rank variance is zero; correlation undefined")]
    ZeroVariance,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("index cache {0}")]
    IndexCache(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn parse(source_name: &str, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            source_name: source_name.to_string(),
            line,
            msg: msg.into(),
        }
    }

    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.display().to_string(),
            source,
        }
    }

    /// Process exit code for this error: 2 for I/O failures, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } => 2,
            _ => 1,
        }
    }
}
