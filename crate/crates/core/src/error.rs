use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("singular {what}: {detail}")]
    Singular { what: String, detail: String },

    /// Conservation was not imposed; `leftover` is the Schrödinger-equation
    /// term that has no counterpart on the right-hand side.
    #[error("precondition violated: {msg} (leftover term {leftover})")]
    Precondition { msg: String, leftover: Complex64 },

    #[error("range error: {0}")]
    Range(String),

    #[error("degenerate parameters: {0}")]
    Degenerate(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;
