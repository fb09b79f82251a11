use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Invalid configuration; `path` is a JSON pointer into the document.
    #[error("config error at {}: {message}", if path.is_empty() { "/" } else { path.as_str() })]
    Config { path: String, message: String },

    #[error("cannot read {}: {source}", path.display())]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("cannot write {}: {source}", path.display())]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },

    /// Malformed input file referenced by the configuration.
    #[error("{}: {source}", path.display())]
    Input {
        path: PathBuf,
        source: vqe_forge_core::Error,
    },

    #[error(transparent)]
    Core(#[from] vqe_forge_core::Error),
}

impl CliError {
    pub fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Config {
            path: path.into(),
            message: message.into(),
        }
    }

    /// 2 for configuration and input problems, 3 for failures while running.
    pub fn exit_code(&self) -> u8 {
        use vqe_forge_core::Error as E;
        match self {
            CliError::Config { .. } | CliError::Read { .. } | CliError::Input { .. } => 2,
            CliError::Write { .. } => 3,
            CliError::Core(e) => match e {
                E::Invalid(_)
                | E::Format { .. }
                | E::Bitstring { .. }
                | E::Dimension { .. }
                | E::NotHermitian(_)
                | E::TooLarge(_)
                | E::Json(_) => 2,
                _ => 3,
            },
        }
    }
}
