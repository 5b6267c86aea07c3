use std::fmt;
use std::process::ExitCode;

/// Failures while reading or writing on-disk formats.
#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("bad magic: not a {0} file")]
    BadMagic(&'static str),
    #[error("unsupported {what} version {found} (this build reads {supported})")]
    UnsupportedVersion {
        what: &'static str,
        found: u32,
        supported: u32,
    },
    #[error("checksum mismatch in {0}")]
    ChecksumMismatch(String),
    #[error("truncated {what}: need {need} bytes at offset {offset}, have {len}")]
    Truncated {
        what: String,
        offset: u64,
        need: u64,
        len: u64,
    },
    #[error("malformed {what}: {reason}")]
    Malformed { what: &'static str, reason: String },
    #[error("manifest: {0}")]
    Json(#[from] serde_json::Error),
    #[error("png: {0}")]
    Png(String),
    #[error(transparent)]
    Core(#[from] headbake_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl FormatError {
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        FormatError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    pub fn malformed(what: &'static str, reason: impl Into<String>) -> Self {
        FormatError::Malformed {
            what,
            reason: reason.into(),
        }
    }
}

/// Process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitKind {
    Config = 2,
    Data = 3,
    ValidationFailed = 4,
}

impl ExitKind {
    pub fn code(self) -> u8 {
        self as u8
    }
}

impl From<ExitKind> for ExitCode {
    fn from(k: ExitKind) -> Self {
        ExitCode::from(k.code())
    }
}

/// An error tagged with the exit code it maps to.
#[derive(Debug)]
pub struct CliError {
    pub kind: ExitKind,
    pub error: anyhow::Error,
}

impl CliError {
    pub fn config(e: impl Into<anyhow::Error>) -> Self {
        Self {
            kind: ExitKind::Config,
            error: e.into(),
        }
    }

    pub fn data(e: impl Into<anyhow::Error>) -> Self {
        Self {
            kind: ExitKind::Data,
            error: e.into(),
        }
    }

    pub fn validation(e: impl Into<anyhow::Error>) -> Self {
        Self {
            kind: ExitKind::ValidationFailed,
            error: e.into(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#}", self.error)
    }
}

impl std::error::Error for CliError {}

pub fn core_kind(e: &headbake_core::Error) -> ExitKind {
    use headbake_core::Error as E;
    match e {
        E::EmptyLevel { .. } | E::Invalid { .. } => ExitKind::Data,
        _ => ExitKind::Config,
    }
}

impl From<headbake_core::Error> for CliError {
    fn from(e: headbake_core::Error) -> Self {
        Self {
            kind: core_kind(&e),
            error: e.into(),
        }
    }
}

impl From<FormatError> for CliError {
    fn from(e: FormatError) -> Self {
        let kind = match &e {
            FormatError::Core(c) => core_kind(c),
            _ => ExitKind::Data,
        };
        Self { kind, error: e.into() }
    }
}

pub type CliResult<T> = Result<T, CliError>;
