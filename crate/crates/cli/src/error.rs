use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("unknown key `{key}` at line {line}")]
    UnknownKey { key: String, line: usize },
    #[error("missing key \"{0}\"")]
    MissingKey(String),
    #[error("bad value for `{key}` at line {line}: {message}")]
    BadValue { key: String, line: usize, message: String },
    #[error("subcommand `{subcommand}` does not match experiment `{experiment}` in the config")]
    ExperimentMismatch { subcommand: String, experiment: String },
    #[error("{module}: {source}")]
    Core {
        module: &'static str,
        #[source]
        source: dlgibbs::Error,
    },
    #[error("estimate: {0}")]
    BadInputs(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("serialization: {0}")]
    Serialize(String),
}

pub type Result<T> = std::result::Result<T, CliError>;

/// Tags a core error with the module that raised it.
pub trait InModule<T> {
    fn in_module(self, module: &'static str) -> Result<T>;
}

impl<T> InModule<T> for dlgibbs::Result<T> {
    fn in_module(self, module: &'static str) -> Result<T> {
        self.map_err(|source| CliError::Core { module, source })
    }
}
