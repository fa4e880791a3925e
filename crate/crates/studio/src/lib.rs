//! Configuration, file formats and experiment drivers behind the
//! `wakereserve` command-line tool.

use std::path::PathBuf;

pub mod config;
pub mod plot;
pub mod run;
pub mod tables;

pub use config::StudyConfig;

#[derive(Debug, thiserror::Error)]
pub enum StudioError {
    #[error("cannot read config {path}: {msg}", path = path.display())]
    ConfigFile { path: PathBuf, msg: String },

    /// TOML syntax errors and schema violations such as unknown keys.
    #[error("config: {0}")]
    ConfigParse(String),

    #[error("config: `{key}` {msg}")]
    Config { key: String, msg: String },

    /// A case or cell that could not be solved or simulated.
    #[error("{0}")]
    Failed(String),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: {source}")]
    Csv {
        context: String,
        #[source]
        source: csv::Error,
    },
}

impl StudioError {
    /// Process exit code: 2 for configuration problems, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::ConfigFile { .. } | Self::ConfigParse(_) | Self::Config { .. } => 2,
            _ => 1,
        }
    }

    pub(crate) fn io(context: impl Into<String>) -> impl FnOnce(std::io::Error) -> Self {
        let context = context.into();
        move |source| Self::Io { context, source }
    }

    pub(crate) fn csv(context: impl Into<String>) -> impl FnOnce(csv::Error) -> Self {
        let context = context.into();
        move |source| Self::Csv { context, source }
    }
}
