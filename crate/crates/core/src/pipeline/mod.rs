//! Experiment orchestration: configuration, dataset statistics, synthetic
//! data, search, hyperparameter tuning, training from scratch and reports.

mod config;
mod hparams;
mod report;
mod run;
mod search;
mod stats;
mod synth;
mod trainer;
mod tune;

pub use config::{RunConfig, TrainConfig, TuneConfig};
pub use hparams::{HyperparamSpace, Hyperparams};
pub use report::{evaluate, mean_std, split_fingerprint, write_report, Report, SplitResult};
pub use run::{gcn_baseline, run_pipeline, tune_and_evaluate, write_run, RunSummary, TunedReport};
pub use search::{run_search, select_all, write_search, Checkpoint, SearchOutput, SeedResult, Selection};
pub use stats::{dataset_stats, DatasetStats};
pub use synth::{synthesize, SynthConfig};
pub use trainer::{train_model, MlpModel, ModelSpec, NodeClassifier, TrainOutcome};
pub use tune::{tune, Trial, TuneResult};

use thiserror::Error;

use crate::graphcore::GraphError;
use crate::supernet::SupernetError;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("json error in {path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("every search seed failed: {0}")]
    AllSeedsFailed(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Supernet(#[from] SupernetError),
}

impl PipelineError {
    /// Short machine-readable category for error records.
    pub fn kind(&self) -> &'static str {
        match self {
            PipelineError::Config(_) => "config",
            PipelineError::Io { .. } => "io",
            PipelineError::Json { .. } => "json",
            PipelineError::AllSeedsFailed(_) => "search",
            PipelineError::Graph(_) => "dataset",
            PipelineError::Supernet(_) => "model",
        }
    }
}

/// Pretty JSON file, creating parent directories.
pub fn write_json_file<T: serde::Serialize>(path: &std::path::Path, value: &T) -> Result<(), PipelineError> {
    write_json(path, value)
}

pub(crate) fn write_json<T: serde::Serialize>(path: &std::path::Path, value: &T) -> Result<(), PipelineError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|source| PipelineError::Io {
            path: dir.display().to_string(),
            source,
        })?;
    }
    let text = serde_json::to_string_pretty(value).map_err(|source| PipelineError::Json {
        path: path.display().to_string(),
        source,
    })?;
    std::fs::write(path, text + "\n").map_err(|source| PipelineError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &std::path::Path) -> Result<T, PipelineError> {
    let text = std::fs::read_to_string(path).map_err(|source| PipelineError::Io {
        path: path.display().to_string(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| PipelineError::Json {
        path: path.display().to_string(),
        source,
    })
}

pub(crate) fn write_text(path: &std::path::Path, text: &str) -> Result<(), PipelineError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|source| PipelineError::Io {
            path: dir.display().to_string(),
            source,
        })?;
    }
    std::fs::write(path, text).map_err(|source| PipelineError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Independent 64-bit seed for a labeled sub-task of a run.
pub fn derive_seed(master: u64, label: &str) -> u64 {
    crate::numkit::SeededRng::new(master, label).next_u64()
}
