use std::fmt;

/// Process exit codes. Stable; documented in the README.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitKind {
    Usage = 1,
    Data = 2,
    Internal = 3,
}

#[derive(Debug)]
pub struct CliError {
    pub kind: ExitKind,
    pub error: anyhow::Error,
}

impl CliError {
    pub fn usage(msg: impl fmt::Display) -> Self {
        Self::new(ExitKind::Usage, anyhow::anyhow!("{msg}"))
    }

    pub fn data(msg: impl fmt::Display) -> Self {
        Self::new(ExitKind::Data, anyhow::anyhow!("{msg}"))
    }

    pub fn internal(msg: impl fmt::Display) -> Self {
        Self::new(ExitKind::Internal, anyhow::anyhow!("{msg}"))
    }

    pub fn new(kind: ExitKind, error: anyhow::Error) -> Self {
        Self { kind, error }
    }

    pub fn context(self, ctx: impl fmt::Display + Send + Sync + 'static) -> Self {
        Self {
            kind: self.kind,
            error: self.error.context(ctx),
        }
    }

    pub fn code(&self) -> i32 {
        self.kind as i32
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#}", self.error)
    }
}

impl From<flowroi::Error> for CliError {
    fn from(e: flowroi::Error) -> Self {
        let kind = if e.is_data_error() {
            ExitKind::Data
        } else {
            ExitKind::Usage
        };
        Self::new(kind, e.into())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::new(ExitKind::Data, e.into())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        Self::new(ExitKind::Internal, e.into())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        Self::new(ExitKind::Data, e.into())
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Attaches a message to any error convertible into [`CliError`].
pub trait Context<T> {
    fn ctx(self, msg: impl fmt::Display + Send + Sync + 'static) -> CliResult<T>;
}

impl<T, E: Into<CliError>> Context<T> for Result<T, E> {
    fn ctx(self, msg: impl fmt::Display + Send + Sync + 'static) -> CliResult<T> {
        self.map_err(|e| e.into().context(msg))
    }
}
