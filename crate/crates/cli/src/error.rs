use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] macroreal::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> u8 {
        use macroreal::Error as E;
        match self {
            CliError::Config(_) => 2,
            CliError::Io { .. } => 1,
            CliError::Core(e) => match e {
                E::InvalidArgument(_)
                | E::DimensionMismatch { .. }
                | E::BasisMismatch(_)
                | E::NotHermitian(_)
                | E::NotDiagonalized(_) => 2,
                E::NumericalRegime(_) | E::Eigensolver(_) => 3,
                E::IwmNotEstablished(_) => 4,
            },
        }
    }
}
