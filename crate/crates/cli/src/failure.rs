use sensegen::Error;

/// Command failure, classified by exit code.
#[derive(Debug, thiserror::Error)]
pub enum Failure {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Checkpoint(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Config(_) => 2,
            Failure::Data(_) => 3,
            Failure::Checkpoint(_) => 4,
        }
    }

    /// Wraps a library error raised while reading or preparing data.
    pub fn data(context: impl std::fmt::Display) -> impl FnOnce(Error) -> Failure {
        move |e| match e {
            Error::Config(m) => Failure::Config(format!("{context}: {m}")),
            other => Failure::Data(format!("{context}: {other}")),
        }
    }

    /// Wraps a library error raised while reading a checkpoint.
    pub fn checkpoint(context: impl std::fmt::Display) -> impl FnOnce(Error) -> Failure {
        move |e| Failure::Checkpoint(format!("{context}: {e}"))
    }

    /// Wraps a library error raised while writing `path`.
    pub fn io_lib(path: &std::path::Path) -> impl FnOnce(Error) -> Failure + '_ {
        move |e| Failure::Data(format!("writing {}: {e}", path.display()))
    }

    pub fn io(context: impl std::fmt::Display) -> impl FnOnce(std::io::Error) -> Failure {
        move |e| Failure::Data(format!("{context}: {e}"))
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) => Failure::Config(e.to_string()),
            Error::Format { .. } | Error::UnsupportedVersion { .. } => Failure::Checkpoint(e.to_string()),
            _ => Failure::Data(e.to_string()),
        }
    }
}
