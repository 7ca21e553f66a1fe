use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::{PipelineError, SynthConfig};
use crate::opspace::AggOpKind;
use crate::selector::SelectOptions;
use crate::shrinker::ShrinkPlan;
use crate::supernet::SearchConfig;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    /// Stop after this many epochs without a new best validation accuracy.
    pub patience: usize,
    pub max_epochs: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            patience: 100,
            max_epochs: 1000,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TuneConfig {
    pub iters: usize,
    /// Split used to score trials.
    pub split: usize,
}

impl Default for TuneConfig {
    fn default() -> Self {
        TuneConfig { iters: 100, split: 0 }
    }
}

/// Everything a run needs; echoed into every report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub dataset: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub seeds: Vec<u64>,
    pub search: SearchConfig,
    pub shrink: ShrinkPlan,
    /// Split whose train/validation nodes drive the search.
    pub search_split: usize,
    pub selection: SelectOptions,
    /// Also select with every criterion from each compact supernet.
    pub ablation: bool,
    pub tune: TuneConfig,
    pub train: TrainConfig,
    /// Evaluate on the first `eval_splits` splits (all when absent).
    pub eval_splits: Option<usize>,
    pub synth: SynthConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            dataset: None,
            out: None,
            seeds: vec![0],
            search: SearchConfig::default(),
            shrink: ShrinkPlan::default(),
            search_split: 0,
            selection: SelectOptions::default(),
            ablation: false,
            tune: TuneConfig::default(),
            train: TrainConfig::default(),
            eval_splits: None,
            synth: SynthConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: &str| Err(PipelineError::Config(m.to_string()));
        if self.seeds.is_empty() {
            return bad("seeds must not be empty");
        }
        self.search
            .validate()
            .map_err(|e| PipelineError::Config(e.to_string()))?;
        if self.shrink.final_candidates(AggOpKind::ALL.len()).is_none() {
            return bad("shrink plan would remove every aggregator from a layer");
        }
        if self.train.max_epochs == 0 {
            return bad("train.max_epochs must be >= 1");
        }
        if self.eval_splits == Some(0) {
            return bad("eval_splits must be >= 1");
        }
        self.synth.validate()
    }

    pub fn load(path: &std::path::Path) -> Result<Self, PipelineError> {
        let cfg: RunConfig = super::read_json(path)?;
        cfg.validate()?;
        Ok(cfg)
    }
}
