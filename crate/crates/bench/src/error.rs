use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("malformed results file at line {line}: {message}")]
    Results { line: usize, message: String },
    #[error(transparent)]
    Core(#[from] multiexpr::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl BenchError {
    /// Whether the error stems from the experiment description rather than
    /// from running it.
    pub fn is_config(&self) -> bool {
        matches!(self, BenchError::Config(_))
    }
}

pub type Result<T> = std::result::Result<T, BenchError>;
