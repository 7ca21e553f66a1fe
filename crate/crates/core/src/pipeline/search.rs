use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{write_json, write_text, PipelineError, RunConfig};
use crate::graphcore::{Graph, SplitSet};
use crate::selector::{select, Criterion, SelectOptions, SelectionReport};
use crate::shrinker::{progressive_train, ShrinkLog, ShrinkOutcome, ShrinkPlan};
use crate::supernet::{accuracy, Genotype, GraphContext, Mode, SearchConfig, SplitRows, Supernet};

/// A compact supernet with what is needed to select from it again.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: String,
    pub dataset: String,
    pub seed: u64,
    pub search_split: usize,
    pub plan: ShrinkPlan,
    pub val_acc: f64,
    pub supernet: Supernet,
    pub shrink_log: ShrinkLog,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Selection {
    pub criterion: Criterion,
    pub genotype: Genotype,
    pub report: SelectionReport,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SeedResult {
    pub seed: u64,
    /// Validation accuracy of the compact supernet (expectation mode).
    pub val_acc: f64,
    pub best: bool,
    pub genotype: Genotype,
    pub selection: SelectionReport,
    pub ablation: Vec<Selection>,
    pub outcome: ShrinkOutcome,
    pub timing_secs: BTreeMap<String, f64>,
    #[serde(skip)]
    pub checkpoint: Option<Checkpoint>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SearchOutput {
    pub dataset: String,
    pub results: Vec<SeedResult>,
    pub failures: Vec<(u64, String)>,
    pub best_seed: u64,
}

impl SearchOutput {
    pub fn best(&self) -> &SeedResult {
        self.results
            .iter()
            .find(|r| r.best)
            .expect("a successful search marks one seed as best")
    }
}

/// Selects with every criterion from one supernet.
pub fn select_all(
    net: &Supernet,
    ctx: &GraphContext,
    rows: &SplitRows,
    base: &SelectOptions,
) -> Result<Vec<Selection>, PipelineError> {
    Criterion::ALL
        .iter()
        .map(|&criterion| {
            let opts = SelectOptions {
                criterion,
                ..base.clone()
            };
            let (genotype, report) = select(net, ctx, rows, &opts)?;
            Ok(Selection {
                criterion,
                genotype,
                report,
            })
        })
        .collect()
}

fn search_one(
    graph: &Graph,
    ctx: &GraphContext,
    rows: &SplitRows,
    cfg: &RunConfig,
    seed: u64,
) -> Result<SeedResult, PipelineError> {
    let mut timing = BTreeMap::new();
    let search_cfg = SearchConfig {
        seed,
        ..cfg.search.clone()
    };
    let started = Instant::now();
    let mut net = Supernet::build(graph.feature_dim(), graph.num_classes, &search_cfg)?;
    let outcome = progressive_train(&mut net, &cfg.shrink, ctx, rows)?;
    timing.insert("shrink".to_string(), started.elapsed().as_secs_f64());

    let logits = net.logits(ctx, Mode::Expectation)?;
    let val_acc = accuracy(&logits, &ctx.labels, &rows.val);
    let source = format!("{}/seed-{seed}", graph.name);
    let opts = SelectOptions {
        seed,
        source: Some(source),
        ..cfg.selection.clone()
    };
    let started = Instant::now();
    let (genotype, selection) = select(&net, ctx, rows, &opts)?;
    let ablation = if cfg.ablation {
        select_all(&net, ctx, rows, &opts)?
    } else {
        Vec::new()
    };
    timing.insert("select".to_string(), started.elapsed().as_secs_f64());
    let checkpoint = Checkpoint {
        version: env!("CARGO_PKG_VERSION").to_string(),
        dataset: graph.name.clone(),
        seed,
        search_split: cfg.search_split,
        plan: cfg.shrink,
        val_acc,
        supernet: net,
        shrink_log: outcome.log.clone(),
    };
    Ok(SeedResult {
        seed,
        val_acc,
        best: false,
        genotype,
        selection,
        ablation,
        outcome,
        timing_secs: timing,
        checkpoint: Some(checkpoint),
    })
}

/// Searches once per configured seed; the seed whose compact supernet has
/// the highest validation accuracy is marked best (ties go to the lowest
/// seed). A failing seed is recorded and skipped.
pub fn run_search(graph: &Graph, splits: &SplitSet, cfg: &RunConfig) -> Result<SearchOutput, PipelineError> {
    cfg.validate()?;
    let split = splits.splits.get(cfg.search_split).ok_or_else(|| {
        PipelineError::Config(format!(
            "search split {} missing ({} available)",
            cfg.search_split,
            splits.splits.len()
        ))
    })?;
    let ctx = GraphContext::new(graph, cfg.search.layers)?;
    let rows = SplitRows::new(split);
    let mut results = Vec::new();
    let mut failures = Vec::new();
    for &seed in &cfg.seeds {
        match search_one(graph, &ctx, &rows, cfg, seed) {
            Ok(r) => results.push(r),
            Err(e) => failures.push((seed, e.to_string())),
        }
    }
    if results.is_empty() {
        let msg = failures
            .iter()
            .map(|(s, e)| format!("seed {s}: {e}"))
            .collect::<Vec<_>>()
            .join("; ");
        return Err(PipelineError::AllSeedsFailed(msg));
    }
    let mut best = 0;
    for i in 1..results.len() {
        let (a, b) = (&results[i], &results[best]);
        if a.val_acc > b.val_acc || (a.val_acc == b.val_acc && a.seed < b.seed) {
            best = i;
        }
    }
    results[best].best = true;
    Ok(SearchOutput {
        dataset: graph.name.clone(),
        best_seed: results[best].seed,
        results,
        failures,
    })
}

/// Writes per-seed checkpoints, genotypes, selection reports and loss
/// curves, plus `search.json` and the best genotype at the top level.
pub fn write_search(output: &SearchOutput, dir: &Path) -> Result<(), PipelineError> {
    for r in &output.results {
        let seed_dir = dir.join(format!("seed-{}", r.seed));
        if let Some(ckpt) = &r.checkpoint {
            write_json(&seed_dir.join("supernet.json"), ckpt)?;
        }
        write_json(&seed_dir.join("genotype.json"), &r.genotype)?;
        write_json(&seed_dir.join("selection.json"), &r.selection)?;
        write_json(&seed_dir.join("shrink_log.json"), &r.outcome.log)?;
        for a in &r.ablation {
            write_json(&seed_dir.join(format!("genotype-{}.json", a.criterion)), &a.genotype)?;
            write_json(&seed_dir.join(format!("selection-{}.json", a.criterion)), &a.report)?;
        }
        let mut csv = String::from("epoch,tau,train_loss,val_loss\n");
        for h in &r.outcome.history {
            let _ = writeln!(csv, "{},{},{},{}", h.epoch, h.tau, h.train_loss, h.val_loss);
        }
        write_text(&seed_dir.join("history.csv"), &csv)?;
    }
    write_json(&dir.join("genotype.json"), &output.best().genotype)?;
    write_json(&dir.join("search.json"), output)
}
