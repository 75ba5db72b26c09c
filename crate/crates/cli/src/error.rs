use std::fmt;

/// Failure of a command, classified by exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags or configuration (exit 1).
    Usage(String),
    /// Missing or malformed input files (exit 2).
    Data(String),
    /// Anything that went wrong while running (exit 3).
    Runtime(String),
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage: {m}"),
            CliError::Data(m) => write!(f, "data: {m}"),
            CliError::Runtime(m) => write!(f, "{m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<wabc::Error> for CliError {
    fn from(e: wabc::Error) -> Self {
        use wabc::Error as E;
        let msg = e.to_string();
        match e {
            E::InvalidArgument(_) => CliError::Usage(msg),
            E::DimensionMismatch { .. }
            | E::SizeMismatch(..)
            | E::EmptyCloud
            | E::DuplicatePoints
            | E::TooFewSamples { .. }
            | E::DegreeSum { .. }
            | E::Parse(_)
            | E::Json(_)
            | E::Io(_) => CliError::Data(msg),
            E::NotPositiveSemidefinite(_) | E::Asymmetric(_) | E::BudgetExhausted { .. } => CliError::Runtime(msg),
        }
    }
}

pub fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Reading `path` failed or its contents were unusable.
pub fn input(path: &std::path::Path, e: impl fmt::Display) -> CliError {
    CliError::Data(format!("{}: {e}", path.display()))
}
