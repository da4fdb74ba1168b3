use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] gebound::Error),

    #[error("dataset not found: {0}")]
    DatasetNotFound(String),

    #[error("config file not found: {0}")]
    ConfigNotFound(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("could not write output: {0}")]
    Output(String),
}

impl CliError {
    pub fn code(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.code(),
            CliError::DatasetNotFound(_) => "DATASET_NOT_FOUND",
            CliError::ConfigNotFound(_) => "CONFIG_NOT_FOUND",
            CliError::Config(_) => "INVALID_CONFIG",
            CliError::Output(_) => "IO_FAILURE",
        }
    }

    /// `{"error": {"code": ..., "message": ...}}`.
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Body<'a> {
            code: &'a str,
            message: String,
        }
        #[derive(Serialize)]
        struct Envelope<'a> {
            error: Body<'a>,
        }
        serde_json::to_string(&Envelope { error: Body { code: self.code(), message: self.to_string() } })
            .expect("error envelope serializes")
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
