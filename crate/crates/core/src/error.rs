use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error in {op}: {point} is outside {domain}")]
    Domain { op: String, point: f64, domain: String },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },

    #[error("structure error: {0}")]
    Structure(String),

    #[error("evaluation error: {0}")]
    Eval(String),

    #[error("inversion error: {0}")]
    Inversion(String),

    #[error("zero denominator: d(Ax,Ay) vanishes at ({x}, {y})")]
    ZeroDenominator { x: f64, y: f64 },

    #[error("not found: {0}")]
    NotFound(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl Error {
    pub(crate) fn domain(op: impl Into<String>, point: f64, domain: impl ToString) -> Self {
        Error::Domain {
            op: op.into(),
            point,
            domain: domain.to_string(),
        }
    }

    /// True for the error kinds the CLI reports as runtime failures (exit 3).
    pub fn is_runtime(&self) -> bool {
        matches!(
            self,
            Error::Domain { .. } | Error::Inversion(_) | Error::Eval(_) | Error::ZeroDenominator { .. } | Error::Io(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
