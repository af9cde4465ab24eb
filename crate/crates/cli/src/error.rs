use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("cannot read config {}: {source}", path.display())]
    Read { path: PathBuf, source: std::io::Error },

    #[error("malformed config: {0}")]
    Parse(#[from] serde_json::Error),

    #[error("config describes a {found} experiment, not {expected}")]
    WrongExperiment {
        expected: &'static str,
        found: &'static str,
    },

    /// Rejected while setting up the experiment, before any stepping.
    #[error("{0}")]
    Setup(invdisc::Error),

    #[error("{0}")]
    Config(String),

    /// Failure after the experiment started.
    #[error("{0}")]
    Compute(invdisc::Error),

    #[error("cannot write {}: {source}", path.display())]
    Write { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Compute(_) => 2,
            _ => 1,
        }
    }
}
