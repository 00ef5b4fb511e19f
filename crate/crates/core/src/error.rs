use thiserror::Error;

/// Everything that can go wrong across the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("schema violation at row {row}, column `{column}`: {message}")]
    SchemaViolation {
        row: usize,
        column: String,
        message: String,
    },

    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error("row {row}: {message}")]
    Row { row: usize, message: String },

    #[error("invalid schema: {0}")]
    Schema(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("structural error: {0}")]
    Structural(String),

    #[error("validation error at {location}: {message}")]
    Validation { location: String, message: String },

    #[error("training diverged at epoch {epoch}: {message}")]
    Training { epoch: usize, message: String },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("constraint `{constraint}` could not be satisfied within {attempts} draws")]
    Unsatisfiable { constraint: String, attempts: usize },

    #[error("extraction error: {0}")]
    Extraction(String),

    #[error("fit error: {0}")]
    Fit(String),
}

impl Error {
    /// True for errors caused by malformed or inconsistent inputs, as opposed
    /// to failures that happen while a well-formed job is running.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::SchemaViolation { .. }
                | Error::Parse { .. }
                | Error::Row { .. }
                | Error::Schema(_)
                | Error::Config(_)
                | Error::Validation { .. }
                | Error::Structural(_)
        )
    }

    pub(crate) fn parse(location: impl ToString, message: impl ToString) -> Self {
        Error::Parse {
            location: location.to_string(),
            message: message.to_string(),
        }
    }

    pub(crate) fn validation(location: impl ToString, message: impl ToString) -> Self {
        Error::Validation {
            location: location.to_string(),
            message: message.to_string(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
