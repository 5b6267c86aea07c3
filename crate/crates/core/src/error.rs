use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Contract violations and configuration problems raised by the core
/// algorithms.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch for {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("rotation {index} is not orthonormal (max |RᵀR − I| = {error:e})")]
    NonOrthonormal { index: usize, error: f64 },
    #[error("vertex {vertex} has zero-sum skinning weights")]
    DegenerateWeights { vertex: usize },
    #[error("invalid {what}: {reason}")]
    Invalid { what: &'static str, reason: String },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("no isosurface crossings at level {level}")]
    EmptyLevel { level: f64 },
    #[error("unsupported: {0}")]
    Unsupported(String),
}

impl Error {
    pub(crate) fn invalid(what: &'static str, reason: impl Into<String>) -> Self {
        Error::Invalid {
            what,
            reason: reason.into(),
        }
    }

    pub(crate) fn check_len(what: &'static str, expected: usize, got: usize) -> Result<()> {
        if expected == got {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                what,
                expected,
                got,
            })
        }
    }
}
