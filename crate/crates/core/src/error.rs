use thiserror::Error;

#[derive(Debug, Error)]
pub enum NppError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("invalid instance: {0}")]
    Validation(String),
    #[error("generation failed: {0}")]
    Generation(String),
    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, NppError>;
