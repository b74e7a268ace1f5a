use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}, column `{column}`: {reason}")]
    Parse { line: u64, column: String, reason: String },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("degenerate data: {0}")]
    Degenerate(String),

    #[error("no account value available for trader `{trader}` before {at}")]
    NoAccountValue { trader: String, at: String },

    #[error("duplicate snapshot for trader `{trader}` on {date}")]
    DuplicateSnapshot { trader: String, date: String },

    #[error("{what} did not converge: {detail}")]
    NonConvergence { what: String, detail: String },

    #[error("unsupported regime: {0}")]
    Unsupported(String),

    #[error("estimator failed on {failures} of {replicates} bootstrap resamples")]
    Bootstrap { failures: usize, replicates: usize },

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn no_convergence(what: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::NonConvergence { what: what.into(), detail: detail.into() }
    }

    /// Wraps an error with the name of the pipeline stage that produced it.
    pub fn in_stage(self, stage: &str) -> Self {
        Error::Stage { stage: stage.to_string(), source: Box::new(self) }
    }

    /// Stable snake_case label of the innermost error, for machine-readable
    /// reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Parse { .. } => "parse",
            Error::InvalidInput(_) => "invalid_input",
            Error::InsufficientData(_) => "insufficient_data",
            Error::Degenerate(_) => "degenerate",
            Error::NoAccountValue { .. } => "no_account_value",
            Error::DuplicateSnapshot { .. } => "duplicate_snapshot",
            Error::NonConvergence { .. } => "non_convergence",
            Error::Unsupported(_) => "unsupported",
            Error::Bootstrap { .. } => "bootstrap",
            Error::Stage { source, .. } => source.kind(),
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }

    /// True for malformed or missing input, as opposed to numerical failure.
    pub fn is_input_error(&self) -> bool {
        match self {
            Error::Parse { .. }
            | Error::InvalidInput(_)
            | Error::NoAccountValue { .. }
            | Error::DuplicateSnapshot { .. }
            | Error::Io(_)
            | Error::Json(_) => true,
            Error::Stage { source, .. } => source.is_input_error(),
            _ => false,
        }
    }
}
