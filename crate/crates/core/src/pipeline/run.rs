use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{
    evaluate, run_search, tune, write_json, write_report, write_search, HyperparamSpace, ModelSpec, PipelineError,
    Report, RunConfig, SearchOutput, TuneResult,
};
use crate::graphcore::{Graph, SplitSet};
use crate::opspace::AggOpKind;
use crate::supernet::{Genotype, GraphContext};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TunedReport {
    pub tune: TuneResult,
    pub report: Report,
}

/// Result of a full run: search, then tuning and multi-split evaluation of
/// the best genotype and of two fixed baselines.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunSummary {
    pub search: SearchOutput,
    pub searched: TunedReport,
    pub gcn_baseline: TunedReport,
    pub mlp_baseline: TunedReport,
    pub timing_secs: BTreeMap<String, f64>,
}

/// The fixed homophilous baseline: GCN on every layer, all gates open,
/// concatenation fuser.
pub fn gcn_baseline(layers: usize) -> Genotype {
    let mut g = Genotype::uniform(AggOpKind::Gcn, layers);
    g.criterion = Some("fixed".to_string());
    g
}

/// Tunes `spec` on the configured split, then evaluates it over the splits.
pub fn tune_and_evaluate(
    spec: &ModelSpec,
    graph: &Graph,
    splits: &SplitSet,
    cfg: &RunConfig,
    seed: u64,
) -> Result<TunedReport, PipelineError> {
    let split = splits
        .splits
        .get(cfg.tune.split)
        .ok_or_else(|| PipelineError::Config(format!("tune split {} missing", cfg.tune.split)))?;
    let ctx = GraphContext::new(graph, spec.hops())?;
    let started = Instant::now();
    let tuned = tune(
        spec,
        &ctx,
        split,
        &HyperparamSpace::default(),
        cfg.tune.iters,
        &cfg.train,
        &cfg.search.hyper,
        seed,
    )?;
    let tune_secs = started.elapsed().as_secs_f64();
    let mut report = evaluate(
        spec,
        &tuned.best,
        graph,
        &ctx,
        splits,
        cfg.eval_splits,
        &cfg.train,
        &cfg.search.hyper,
        seed,
    )?;
    report.timing_secs.insert("tune".to_string(), tune_secs);
    report.config = serde_json::to_value(cfg).unwrap_or(serde_json::Value::Null);
    Ok(TunedReport { tune: tuned, report })
}

pub fn run_pipeline(graph: &Graph, splits: &SplitSet, cfg: &RunConfig) -> Result<RunSummary, PipelineError> {
    let mut timing = BTreeMap::new();
    let seed = cfg.seeds[0];
    let started = Instant::now();
    let search = run_search(graph, splits, cfg)?;
    timing.insert("search".to_string(), started.elapsed().as_secs_f64());

    let started = Instant::now();
    let searched = tune_and_evaluate(&ModelSpec::Genotype(search.best().genotype.clone()), graph, splits, cfg, seed)?;
    timing.insert("searched".to_string(), started.elapsed().as_secs_f64());

    let started = Instant::now();
    let gcn = ModelSpec::Genotype(gcn_baseline(cfg.search.layers));
    let gcn_baseline = tune_and_evaluate(&gcn, graph, splits, cfg, seed)?;
    timing.insert("gcn_baseline".to_string(), started.elapsed().as_secs_f64());

    let started = Instant::now();
    let mlp_baseline = tune_and_evaluate(&ModelSpec::Mlp, graph, splits, cfg, seed)?;
    timing.insert("mlp_baseline".to_string(), started.elapsed().as_secs_f64());

    Ok(RunSummary {
        search,
        searched,
        gcn_baseline,
        mlp_baseline,
        timing_secs: timing,
    })
}

/// Writes search artifacts under `search/`, each model's report under its
/// own directory, and `summary.json`.
pub fn write_run(summary: &RunSummary, dir: &Path) -> Result<(), PipelineError> {
    write_search(&summary.search, &dir.join("search"))?;
    for (name, t) in [
        ("searched", &summary.searched),
        ("gcn_baseline", &summary.gcn_baseline),
        ("mlp_baseline", &summary.mlp_baseline),
    ] {
        write_report(&t.report, &dir.join(name))?;
        write_json(&dir.join(name).join("tune.json"), &t.tune)?;
    }
    write_json(&dir.join("summary.json"), summary)
}
