use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("integrity error: {0}")]
    Integrity(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("insufficient data for {what}: need at least {needed}, got {got}")]
    InsufficientData {
        what: &'static str,
        needed: usize,
        got: usize,
    },

    #[error("alignment error: {0}")]
    Alignment(String),

    #[error("fetch error ({}): {message}", if *.retryable { "retryable" } else { "fatal" })]
    Fetch { retryable: bool, message: String },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("design error: {0}")]
    Design(String),

    #[error("singular design: {0}")]
    Singular(String),

    #[error("normalization error: {0}")]
    Normalization(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("stage `{stage}` failed for `{subject}`: {source}")]
    Stage {
        stage: String,
        subject: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn insufficient(what: &'static str, needed: usize, got: usize) -> Self {
        Error::InsufficientData { what, needed, got }
    }

    /// Whether retrying the same request could succeed.
    pub fn is_retryable(&self) -> bool {
        matches!(self, Error::Fetch { retryable: true, .. })
    }
}
