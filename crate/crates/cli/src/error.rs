use std::path::Path;

use thiserror::Error;

#[derive(Error, Debug)]
pub enum CliError {
    /// Unreadable or malformed input named by the user.
    #[error("{0}")]
    Input(String),

    #[error("{path}: {source}")]
    InFile {
        path: String,
        source: stwig_core::Error,
    },

    #[error(transparent)]
    Core(#[from] stwig_core::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn at(path: &Path, source: stwig_core::Error) -> Self {
        CliError::InFile {
            path: path.display().to_string(),
            source,
        }
    }

    /// 2 for bad input, 1 for failures of the tool itself.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::InFile { source, .. } | CliError::Core(source) => {
                if source.is_validation() {
                    2
                } else {
                    1
                }
            }
            CliError::Io(_) => 1,
        }
    }
}
