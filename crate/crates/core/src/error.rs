use thiserror::Error;

/// Coarse classification of failures, used by the command-line front end to
/// pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Config,
    Data,
    Numeric,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("config error: {0}")]
    Config(String),

    #[error("schema error: missing required column `{0}`")]
    MissingColumn(String),

    #[error("row error at line {line}: {message}")]
    Row { line: u64, message: String },

    #[error("integrity error: drive `{drive_id}` {message}")]
    Integrity { drive_id: String, message: String },

    #[error("unknown drive result token `{0}`")]
    UnknownDriveResult(String),

    #[error("invalid probability vector {values:?}: {reason}")]
    InvalidProbabilities { values: [f64; 5], reason: String },

    #[error("data error: {0}")]
    Data(String),

    #[error("feature recipe mismatch: {0}")]
    RecipeMismatch(String),

    #[error("model objective mismatch: {0}")]
    ObjectiveMismatch(String),

    #[error("did not converge after {iterations} iterations (gradient max-norm {grad_norm:e})")]
    NonConvergence { iterations: usize, grad_norm: f64 },

    #[error("design matrix is rank deficient (min/max eigenvalue ratio {ratio:e}); refit with l2 > 0")]
    RankDeficient { ratio: f64 },

    #[error("ensemble member {index} failed: {source}")]
    Member {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("prediction failed at play {play}: {source}")]
    Prediction {
        play: String,
        #[source]
        source: Box<Error>,
    },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("toml error: {0}")]
    Toml(#[from] toml::de::Error),
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::Config(_) | Error::Toml(_) | Error::RecipeMismatch(_) | Error::ObjectiveMismatch(_) => {
                ErrorCategory::Config
            }
            Error::NonConvergence { .. } | Error::RankDeficient { .. } | Error::InvalidProbabilities { .. } => {
                ErrorCategory::Numeric
            }
            Error::Member { source, .. } | Error::Prediction { source, .. } => source.category(),
            _ => ErrorCategory::Data,
        }
    }

    pub(crate) fn row(line: u64, message: impl Into<String>) -> Self {
        Error::Row {
            line,
            message: message.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
