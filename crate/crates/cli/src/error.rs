use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad arguments, configuration or missing inputs.
    #[error("{0}")]
    Usage(String),
    /// A check ran and failed.
    #[error("{0}")]
    Check(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] lrc_core::Error),
}

pub type CliResult<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        use lrc_core::Error as E;
        let code = match self {
            CliError::Usage(_) => 2,
            CliError::Check(_) | CliError::Io { .. } => 1,
            CliError::Core(e) => match e {
                E::InvalidArgument(_)
                | E::MissingElastance
                | E::DimensionMismatch { .. }
                | E::RecordMismatch(_)
                | E::Parse { .. }
                | E::Json(_)
                | E::Csv(_) => 2,
                _ => 1,
            },
        };
        ExitCode::from(code)
    }
}

pub fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
    let path = path.into();
    move |source| CliError::Io { path, source }
}
