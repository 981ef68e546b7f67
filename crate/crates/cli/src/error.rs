use std::fmt;

/// CLI failure, split by exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad or missing configuration; exit code 2.
    Config { key: String, message: String },
    /// Numerical or I/O failure while running; exit code 1.
    Run(kspec_core::Error),
}

impl CliError {
    pub fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Self::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Config { .. } => 2,
            Self::Run(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Config { key, message } => write!(f, "config error in `{key}`: {message}"),
            Self::Run(e) => write!(f, "{e}"),
        }
    }
}

impl From<kspec_core::Error> for CliError {
    fn from(e: kspec_core::Error) -> Self {
        Self::Run(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Run(e.into())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        Self::Run(e.into())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Attaches a config key to errors from reading a user-named input.
pub trait InputContext<T> {
    fn for_key(self, key: &str) -> CliResult<T>;
}

impl<T> InputContext<T> for kspec_core::Result<T> {
    fn for_key(self, key: &str) -> CliResult<T> {
        self.map_err(|e| CliError::config(key, e.to_string()))
    }
}
