use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub const USAGE: u8 = 2;
    pub const INFEASIBLE: u8 = 3;
    pub const IO: u8 = 4;

    pub fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => Self::USAGE,
            CliError::Infeasible(_) => Self::INFEASIBLE,
            CliError::Io { .. } => Self::IO,
        }
    }

    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(self.code())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

impl From<cqbc_core::Error> for CliError {
    fn from(e: cqbc_core::Error) -> Self {
        match e {
            cqbc_core::Error::Infeasible { .. } | cqbc_core::Error::AttackImpossible { .. } => {
                CliError::Infeasible(e.to_string())
            }
            _ => CliError::Usage(e.to_string()),
        }
    }
}
