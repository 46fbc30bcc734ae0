use thiserror::Error;

/// Errors raised by the library.
///
/// Variants map onto the CLI exit codes: size-guard refusals are reported
/// separately from validation failures so callers can fall back to a cheaper
/// method.
#[derive(Debug, Error)]
pub enum DirlError {
    #[error("invalid channel: {0}")]
    InvalidChannel(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("size guard: {what} needs {requested}, limit is {limit}")]
    SizeGuard {
        what: &'static str,
        requested: u128,
        limit: u128,
    },

    #[error("malformed file: {0}")]
    Parse(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl DirlError {
    pub fn is_size_guard(&self) -> bool {
        matches!(self, DirlError::SizeGuard { .. })
    }

    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            DirlError::InvalidChannel(_)
                | DirlError::InvalidParameter(_)
                | DirlError::Infeasible(_)
                | DirlError::Parse(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, DirlError>;

pub(crate) fn invalid(msg: impl Into<String>) -> DirlError {
    DirlError::InvalidParameter(msg.into())
}
