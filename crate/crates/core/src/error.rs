use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid gate id {0}; gates are numbered 0..=19")]
    InvalidGate(usize),
    #[error("cannot assign {outputs} outputs to {genes} genes")]
    InfeasibleAssignment { genes: usize, outputs: usize },
    #[error("unknown problem `{0}`")]
    UnknownProblem(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("effort is undefined: no run succeeded")]
    UndefinedEffort,
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
