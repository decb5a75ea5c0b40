//! File formats, plots, experiment recipes, and the runner behind the `nb2e`
//! command-line tool.

pub mod analysis;
pub mod config;
pub mod model_io;
pub mod output;
pub mod recipes;
pub mod runner;
pub mod svg;

use std::path::PathBuf;

use nb2e_core::analysis::AnalysisError;
use nb2e_core::experiment::ExperimentError;

pub use config::{ConfigError, Overrides, RunSpec};

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid config: {0}")]
    Config(#[from] ConfigError),
    #[error("run `{label}` diverged: {source}")]
    Diverged { label: String, source: ExperimentError },
    #[error("run `{label}` failed: {source}")]
    Run { label: String, source: ExperimentError },
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("model file {}: {source}", path.display())]
    ModelFile { path: PathBuf, source: model_io::ModelIoError },
    #[error("analysis failed: {0}")]
    Analysis(#[from] AnalysisError),
}

impl Error {
    /// Process exit status: 2 for configuration problems, 3 for divergence,
    /// 4 for file-system and file-format failures, 1 otherwise.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Config(_) => 2,
            Error::Diverged { .. } => 3,
            Error::Io { .. } | Error::ModelFile { .. } => 4,
            Error::Run { .. } | Error::Analysis(_) => 1,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Error {
        let path = path.into();
        move |source| Error::Io { path, source }
    }

    pub(crate) fn from_run(label: &str, source: ExperimentError) -> Error {
        let label = label.to_string();
        if source.is_divergence() {
            Error::Diverged { label, source }
        } else {
            Error::Run { label, source }
        }
    }
}
