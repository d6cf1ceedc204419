use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Bad parameters or configuration (CLI exit code 2).
    #[error("invalid input: {0}")]
    Invalid(String),
    /// ω or coefficients outside the existence domain (CLI exit code 3).
    #[error("outside existence domain: {0}")]
    Domain(String),
    /// Dense eigensolver failed (CLI exit code 4).
    #[error("eigensolver did not converge: {0}")]
    Eigen(String),
    #[error("length mismatch: expected {expected}, got {got}")]
    Length { expected: usize, got: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Domain(_) => 3,
            Error::Eigen(_) => 4,
            Error::Io(_) => 1,
            _ => 2,
        }
    }
}
