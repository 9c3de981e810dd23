use std::io;
use std::path::PathBuf;

use robust_recon_core::Error as CoreError;

pub type Result<T, E = CliError> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error(transparent)]
    Ingest(#[from] crate::ingest::IngestError),

    #[error("model file: {0}")]
    Model(String),

    #[error(transparent)]
    Core(CoreError),

    #[error("verification failed: gap {gap:e} (threshold {threshold:e}), violation {violation:e}, residual {residual:e}")]
    VerifyFailed { gap: f64, threshold: f64, violation: f64, residual: f64 },
}

impl CliError {
    /// 1 usage, 2 data, 3 solver did not converge or verification failed.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Core(CoreError::NoConvergence { .. }) | CliError::VerifyFailed { .. } => 3,
            _ => 2,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(io::Error) -> CliError {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        CliError::Core(e)
    }
}
