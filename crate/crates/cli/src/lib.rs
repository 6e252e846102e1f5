//! Driver for the `polaron` command: configuration, orchestration and
//! plot-ready output files.

pub mod config;
pub mod output;
pub mod run;

pub use config::{resolve, FileConfig, Mode, Overrides, RunConfig};
pub use run::{execute, Report};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad configuration or flags; exit code 2.
    #[error("invalid configuration: {0}")]
    Validation(String),
    /// Numerical failure during the run; exit code 1.
    #[error("computation failed: {0}")]
    Compute(#[from] polaron_core::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Compute(_) | CliError::Io(_) => 1,
        }
    }
}
