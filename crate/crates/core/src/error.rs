use thiserror::Error;

/// Errors raised by the certified pipeline.
///
/// Every variant maps onto a process exit status in the CLI, see
/// [`Error::exit_code`].
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("precision request of {requested} bits exceeds the cap of {cap} bits")]
    PrecisionCap { requested: u32, cap: u32 },

    #[error("undecidable at the precision cap: {0}")]
    Undecidable(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("no admissible z for x = {x}")]
    NoAdmissibleZ { x: u64 },

    #[error("no sign change of the defining function on (beta, gamma) for x = {x}, z = {z}")]
    NoSignChange { x: u64, z: u64 },

    #[error("no lifting multiplier found up to cap {cap}")]
    N0NotFound { cap: u64 },

    #[error("certification failed: {0}")]
    Certification(String),

    #[error("empty Cantor level: {0}")]
    EmptyLevel(String),

    #[error("refinement failure: {0}")]
    Refinement(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Exit status used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NoAdmissibleZ { .. } | Error::EmptyLevel(_) => 2,
            Error::N0NotFound { .. } => 3,
            Error::NoSignChange { .. } | Error::Certification(_) | Error::Refinement(_) => 4,
            Error::Undecidable(_) | Error::PrecisionCap { .. } => 5,
            Error::Domain(_) | Error::Parse { .. } => 65,
        }
    }
}
