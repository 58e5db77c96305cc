use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum GptcmError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid dataset: {}", .0.join("; "))]
    InvalidData(Vec<String>),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("sampler failure: {0}")]
    Sampler(String),

    #[error("MCMC failure: {0}")]
    Convergence(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("parse error in {file}: {msg}")]
    Parse { file: String, msg: String },
}

impl GptcmError {
    /// Stable machine-readable code for the CLI's error line.
    pub fn code(&self) -> &'static str {
        match self {
            GptcmError::Domain(_) => "E_DOMAIN",
            GptcmError::Dimension(_) => "E_DIMENSION",
            GptcmError::InvalidData(_) => "E_DATA",
            GptcmError::Config(_) => "E_CONFIG",
            GptcmError::Contract(_) => "E_CONTRACT",
            GptcmError::Sampler(_) => "E_SAMPLER",
            GptcmError::Convergence(_) => "E_MCMC",
            GptcmError::Io(_) => "E_IO",
            GptcmError::Csv(_) => "E_CSV",
            GptcmError::Json(_) => "E_JSON",
            GptcmError::Parse { .. } => "E_PARSE",
        }
    }

    /// Whether the failure is attributable to user input (CLI exit code 2)
    /// as opposed to a runtime failure (exit code 3).
    pub fn is_input_error(&self) -> bool {
        !matches!(
            self,
            GptcmError::Sampler(_) | GptcmError::Convergence(_) | GptcmError::Io(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, GptcmError>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(GptcmError::Domain(msg.into()))
}
