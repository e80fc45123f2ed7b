//! End-to-end orchestration: configuration, the learning pipeline, the
//! Hamming-error evaluation protocol and synthetic data generation.

mod config;
mod eval;
mod learn;
mod synth;

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::counting::CountError;
use crate::weights::WeightError;

pub use config::{PipelineConfig, KEYS};
pub use eval::{evaluate, hamming, EvalConfig, EvalReport, EvalRow};
pub use learn::{learn_rules, learn_theory, run_pipeline, Learned};
pub use synth::{synth_generate, WorldSampler};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {message}", path.display())]
    Input { path: PathBuf, message: String },
    #[error("configuration: {0}")]
    Config(String),
    #[error("{stage}: {message}")]
    Stage { stage: &'static str, message: String, budget: bool },
}

impl PipelineError {
    /// 1 learning infeasibility, 2 input or output, 3 budget exhaustion.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Io { .. } | PipelineError::Input { .. } | PipelineError::Config(_) => 2,
            PipelineError::Stage { budget: true, .. } => 3,
            PipelineError::Stage { .. } => 1,
        }
    }

    pub fn stage(stage: &'static str, e: impl std::fmt::Display) -> Self {
        PipelineError::Stage { stage, message: e.to_string(), budget: false }
    }

    pub fn counting(stage: &'static str, e: &CountError) -> Self {
        PipelineError::Stage { stage, message: e.to_string(), budget: e.is_budget() }
    }

    pub fn weights(e: &WeightError) -> Self {
        match e {
            WeightError::Count { source, .. } => {
                PipelineError::Stage { stage: "weights", message: e.to_string(), budget: source.is_budget() }
            }
            WeightError::Infeasible(_) => PipelineError::stage("weights", e),
        }
    }
}

pub fn read_file(path: &Path) -> Result<String, PipelineError> {
    std::fs::read_to_string(path).map_err(|source| PipelineError::Io { path: path.to_path_buf(), source })
}

pub fn write_file(path: &Path, text: &str) -> Result<(), PipelineError> {
    std::fs::write(path, text).map_err(|source| PipelineError::Io { path: path.to_path_buf(), source })
}

/// `path` with `suffix` appended to its file name.
pub fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}
