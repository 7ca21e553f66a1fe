use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{derive_seed, train_model, Hyperparams, ModelSpec, PipelineError, TrainConfig};
use crate::graphcore::{node_homophily, Graph, Split, SplitSet};
use crate::opspace::OpHyper;
use crate::supernet::{GraphContext, SplitRows};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitResult {
    pub split: usize,
    pub val_acc: f64,
    pub test_acc: f64,
    pub best_epoch: usize,
    pub epochs_run: usize,
    pub diverged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub dataset: String,
    pub model: String,
    pub spec: ModelSpec,
    pub hyperparams: Hyperparams,
    pub per_split: Vec<SplitResult>,
    /// Mean and population standard deviation of test accuracy over the
    /// splits that did not diverge.
    pub mean: Option<f64>,
    pub std: Option<f64>,
    pub node_homophily: Option<f64>,
    pub stopping: TrainConfig,
    pub timing_secs: BTreeMap<String, f64>,
    pub warnings: Vec<String>,
    pub config: serde_json::Value,
    pub version: String,
}

/// Mean and population standard deviation; `None` for an empty list.
pub fn mean_std(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    Some((mean, var.sqrt()))
}

/// Trains `spec` from scratch on each of the first `count` splits (fresh
/// initialization per split, seeded from the split contents) and reports test accuracy at the
/// best-validation epoch.
#[allow(clippy::too_many_arguments)]
pub fn evaluate(
    spec: &ModelSpec,
    hp: &Hyperparams,
    graph: &Graph,
    ctx: &GraphContext,
    splits: &SplitSet,
    count: Option<usize>,
    stop: &TrainConfig,
    hyper: &OpHyper,
    seed: u64,
) -> Result<Report, PipelineError> {
    let started = std::time::Instant::now();
    let count = count.unwrap_or(splits.splits.len()).min(splits.splits.len());
    if count == 0 {
        return Err(PipelineError::Config("dataset has no splits to evaluate".into()));
    }
    let mut per_split = Vec::with_capacity(count);
    let mut warnings = Vec::new();
    for (i, split) in splits.splits.iter().take(count).enumerate() {
        let rows = SplitRows::new(split);
        let model_seed = derive_seed(seed, &format!("eval/split={}", split_fingerprint(split)));
        let mut model = spec.build(ctx.feature_dim(), ctx.num_classes, hp, hyper, model_seed)?;
        let out = train_model(model.as_mut(), ctx, &rows, hp, stop, model_seed)?;
        if out.diverged {
            warnings.push(format!("split {i} diverged and is excluded from the mean"));
        }
        per_split.push(SplitResult {
            split: i,
            val_acc: out.val_acc,
            test_acc: out.test_acc,
            best_epoch: out.best_epoch,
            epochs_run: out.epochs_run,
            diverged: out.diverged,
        });
    }
    let kept: Vec<f64> = per_split.iter().filter(|r| !r.diverged).map(|r| r.test_acc).collect();
    let stats = mean_std(&kept);
    let mut timing_secs = BTreeMap::new();
    timing_secs.insert("train_eval".to_string(), started.elapsed().as_secs_f64());
    Ok(Report {
        dataset: graph.name.clone(),
        model: spec.describe(),
        spec: spec.clone(),
        hyperparams: *hp,
        per_split,
        mean: stats.map(|s| s.0),
        std: stats.map(|s| s.1),
        node_homophily: node_homophily(graph).ok(),
        stopping: *stop,
        timing_secs,
        warnings,
        config: serde_json::Value::Null,
        version: env!("CARGO_PKG_VERSION").to_string(),
    })
}

/// Hex digest of the split's index lists; equal splits share a model seed.
pub fn split_fingerprint(split: &Split) -> String {
    use sha2::{Digest, Sha256};
    let mut h = Sha256::new();
    for part in [&split.train, &split.val, &split.test] {
        for &i in part.iter() {
            h.update((i as u64).to_le_bytes());
        }
        h.update(u64::MAX.to_le_bytes());
    }
    h.finalize().iter().take(8).fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// Writes `report.json` and `splits.csv` into `dir`.
pub fn write_report(report: &Report, dir: &Path) -> Result<(), PipelineError> {
    super::write_json(&dir.join("report.json"), report)?;
    let mut csv = String::from("split,val_acc,test_acc,best_epoch,epochs_run,diverged\n");
    for r in &report.per_split {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{}",
            r.split, r.val_acc, r.test_acc, r.best_epoch, r.epochs_run, r.diverged
        );
    }
    super::write_text(&dir.join("splits.csv"), &csv)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn population_statistics() {
        assert_eq!(mean_std(&[0.5; 10]), Some((0.5, 0.0)));
        let (m, s) = mean_std(&[1.0, 3.0]).unwrap();
        assert_eq!((m, s), (2.0, 1.0));
        assert_eq!(mean_std(&[]), None);
    }
}
