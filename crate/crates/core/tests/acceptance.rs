//! Acceptance criteria, one status line each.
//!
//! Criteria 1 and 8 need public benchmark data in this crate's dataset
//! format: set `HEG_DATA_DIR` to a directory holding `cornell/`, `texas/`,
//! `wisconsin/`, `actor/`, `cora/`, `citeseer/` and `pubmed/`. Without it
//! they report SKIP. `HEG_ACCEPT_ONLY=2,5` runs a subset.

mod common;

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::process::{Command, ExitCode};
use std::time::Instant;

use heg_core::graphcore::{
    d_hete, heterophily_matrix, khop_adjacency, load_dataset, one_hot, Graph, SplitSet,
};
use heg_core::numkit::{gradient_check, Activation, Param, SeededRng, SparseMatrix, Tape, Tensor};
use heg_core::opspace::{
    agg_forward, fuser_forward, init_agg_params, init_fuser_params, AggOpKind, FuserKind, HopGraph, OpContext,
    OpError, OpHyper,
};
use heg_core::pipeline::{
    dataset_stats, read_json, run_pipeline, run_search, write_search, Checkpoint, RunConfig, SynthConfig, TrainConfig,
    TuneConfig,
};
use heg_core::selector::{select, Criterion, HeteNodes, Scorer, SelectOptions, SelectionReport};
use heg_core::shrinker::{progressive_train, replay_drop, ShrinkPlan};
use heg_core::supernet::{temperature, GraphContext, Mode, SearchConfig, SplitRows, Supernet};

enum Status {
    Pass,
    Fail,
    Skip,
}

struct Outcome {
    status: Status,
    detail: String,
}

impl Outcome {
    fn check(ok: bool, detail: impl Into<String>) -> Self {
        Outcome {
            status: if ok { Status::Pass } else { Status::Fail },
            detail: detail.into(),
        }
    }

    fn skip(detail: impl Into<String>) -> Self {
        Outcome {
            status: Status::Skip,
            detail: detail.into(),
        }
    }
}

type Check = fn() -> Outcome;

fn main() -> ExitCode {
    let criteria: [(u32, &str, bool, Check); 9] = [
        (1, "dataset statistics", true, c1_dataset_stats),
        (2, "gradient suite", true, c2_gradients),
        (3, "k-hop oracle equivalence", true, c3_khop),
        (4, "shrinking contract", true, c4_shrinking),
        (5, "mixed-edge contract", true, c5_mixed_edge),
        (6, "selection contract", true, c6_selection),
        (7, "end-to-end SBM run", true, c7_end_to_end),
        (8, "Cornell reproduction (non-gating)", false, c8_cornell),
        (9, "ablation harness", true, c9_ablation),
    ];
    let only: Option<BTreeSet<u32>> = std::env::var("HEG_ACCEPT_ONLY")
        .ok()
        .map(|s| s.split(',').filter_map(|x| x.trim().parse().ok()).collect());
    // `cargo test -- --list` and filters from the default harness.
    if std::env::args().any(|a| a == "--list") {
        return ExitCode::SUCCESS;
    }
    let mut failed = 0;
    for (id, name, gating, run) in criteria {
        if only.as_ref().is_some_and(|o| !o.contains(&id)) {
            continue;
        }
        let started = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Outcome::check(false, format!("panicked: {msg}"))
        });
        let tag = match outcome.status {
            Status::Pass => "PASS",
            Status::Skip => "SKIP",
            Status::Fail if gating => {
                failed += 1;
                "FAIL"
            }
            Status::Fail => "FAIL (non-gating)",
        };
        println!(
            "[{tag}] criterion {id}: {name} ({:.1}s) {}",
            started.elapsed().as_secs_f64(),
            outcome.detail
        );
    }
    if failed > 0 {
        println!("{failed} gating criteria failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}

fn issues(problems: &[String]) -> String {
    if problems.is_empty() {
        String::new()
    } else {
        format!("; {}", problems.join("; "))
    }
}

fn data_dir() -> Option<PathBuf> {
    std::env::var_os("HEG_DATA_DIR").map(PathBuf::from)
}

fn c1_dataset_stats() -> Outcome {
    let Some(root) = data_dir() else {
        return Outcome::skip("HEG_DATA_DIR not set; public datasets unavailable");
    };
    // name, nodes, edge-list entries, features, classes, node homophily
    let table: [(&str, usize, usize, usize, usize, f64); 7] = [
        ("cornell", 183, 295, 1703, 5, 0.11),
        ("texas", 183, 309, 1703, 5, 0.06),
        ("wisconsin", 251, 499, 1703, 5, 0.16),
        ("actor", 7600, 33544, 931, 5, 0.24),
        ("cora", 2708, 5429, 1433, 7, 0.83),
        ("citeseer", 3327, 4732, 3703, 6, 0.71),
        ("pubmed", 19717, 44338, 500, 3, 0.79),
    ];
    let started = Instant::now();
    let mut problems = Vec::new();
    for (name, n, e, d, p, gamma) in table {
        let dir = root.join(name);
        let (graph, _) = match load_dataset(&dir) {
            Ok(x) => x,
            Err(err) => {
                problems.push(format!("{name}: {err}"));
                continue;
            }
        };
        let s = dataset_stats(&graph);
        let lines = std::fs::read_to_string(dir.join("edges.txt"))
            .map(|t| t.lines().filter(|l| !l.trim().is_empty()).count())
            .unwrap_or(0);
        let h = s.node_homophily.unwrap_or(f64::NAN);
        if s.nodes != n || s.features != d || s.classes != p || (lines != e && s.edges != e) {
            problems.push(format!(
                "{name}: got n={} e={}/{} d={} p={}",
                s.nodes, s.edges, lines, s.features, s.classes
            ));
        }
        if !((h - gamma).abs() <= 0.01) {
            problems.push(format!("{name}: homophily {h:.3} vs {gamma}"));
        }
    }
    let secs = started.elapsed().as_secs_f64();
    if secs >= 60.0 {
        problems.push(format!("took {secs:.0}s"));
    }
    Outcome::check(problems.is_empty(), problems.join("; "))
}

fn random_tensor(rows: usize, cols: usize, rng: &mut SeededRng) -> Tensor {
    Tensor::from_vec(rows, cols, (0..rows * cols).map(|_| rng.uniform_range(-1.0, 1.0)).collect()).unwrap()
}

fn num_err(e: OpError) -> heg_core::numkit::NumError {
    match e {
        OpError::Num(n) => n,
        other => panic!("{other}"),
    }
}

const GRAD_TOL: f64 = 1e-4;
const GRAD_STEP: f64 = 1e-6;

/// Maximum relative error of `loss` with respect to the selected parameters
/// of `net`.
fn net_gradient_error(
    net: &mut Supernet,
    select: fn(&mut Supernet) -> Vec<&mut Param>,
    loss: &dyn Fn(&Supernet) -> (Tape, heg_core::numkit::Var),
) -> f64 {
    let (tape, l) = loss(net);
    let grads = tape.backward(l).unwrap();
    for p in select(net) {
        p.zero_grad();
    }
    grads.accumulate(select(net));
    let analytic: Vec<Vec<f64>> = select(net).iter().map(|p| p.grad.data().to_vec()).collect();
    let mut worst: f64 = 0.0;
    for (pi, a) in analytic.iter().enumerate() {
        for (ci, &av) in a.iter().enumerate() {
            let mut at = |delta: f64| {
                select(net)[pi].value.data_mut()[ci] += delta;
                let (t, l) = loss(net);
                let v = t.value(l).item();
                select(net)[pi].value.data_mut()[ci] -= delta;
                v
            };
            let numeric = (at(GRAD_STEP) - at(-GRAD_STEP)) / (2.0 * GRAD_STEP);
            worst = worst.max((av - numeric).abs() / av.abs().max(1.0));
        }
    }
    worst
}

fn input_and_classifier(net: &mut Supernet) -> Vec<&mut Param> {
    let mut out: Vec<&mut Param> = net.input.params_mut().into_iter().collect();
    out.extend(net.classifier.params_mut());
    out
}

fn alphas(net: &mut Supernet) -> Vec<&mut Param> {
    net.alpha_params_mut()
}

fn c2_gradients() -> Outcome {
    const D: usize = 3;
    let hyper = OpHyper::default();
    let mut worst: Vec<(String, f64)> = Vec::new();
    let mut record = |name: String, err: f64| match worst.iter_mut().find(|w| w.0 == name) {
        Some(w) => w.1 = w.1.max(err),
        None => worst.push((name, err)),
    };
    for trial in 0..100u64 {
        let mut rng = SeededRng::new(trial, "acceptance/gradients");
        let edges = common::random_edges(6, 0.45, &mut rng);
        let a = SparseMatrix::from_undirected_edges(6, &edges).unwrap();
        let hop_k = 1 + (trial % 2) as usize;
        let hop = HopGraph::new(&khop_adjacency(&a, hop_k).unwrap());
        for kind in AggOpKind::ALL {
            let mut params = init_agg_params(kind, D, &mut rng).params;
            if kind == AggOpKind::Gin {
                params[0].value = Tensor::scalar(rng.uniform_range(-0.5, 0.5));
            }
            let k = params.len();
            params.push(Param::new(random_tensor(6, D, &mut rng)));
            params.push(Param::new(random_tensor(6, D, &mut rng)));
            let probe = random_tensor(6, D, &mut rng);
            let layer = 1 + (trial % 3) as usize;
            let err = gradient_check(
                |tape: &mut Tape, vars| {
                    let ctx = OpContext {
                        h_prev: vars[k],
                        h0: vars[k + 1],
                        hop: &hop,
                        layer,
                        train: false,
                        activation: Activation::Elu,
                        dropout: 0.5,
                        hyper: &hyper,
                    };
                    let out = agg_forward(tape, kind, &vars[..k], &ctx).map_err(num_err)?;
                    let r = tape.constant(probe.clone());
                    let prod = tape.hadamard(out, r)?;
                    tape.sum(prod)
                },
                &mut params,
                GRAD_STEP,
                trial,
            )
            .unwrap();
            record(kind.name().to_string(), err);
        }
        for kind in FuserKind::ALL {
            let mut params = init_fuser_params(kind, 3, D, &mut rng).params;
            if kind == FuserKind::Lstm {
                params[2].value = random_tensor(1, 4 * D, &mut rng);
            }
            let k = params.len();
            for _ in 0..3 {
                params.push(Param::new(random_tensor(6, D, &mut rng)));
            }
            let probe = random_tensor(6, D, &mut rng);
            let err = gradient_check(
                |tape: &mut Tape, vars| {
                    let out = fuser_forward(tape, kind, &vars[k..], &vars[..k]).map_err(num_err)?;
                    let r = tape.constant(probe.clone());
                    let prod = tape.hadamard(out, r)?;
                    tape.sum(prod)
                },
                &mut params,
                GRAD_STEP,
                trial,
            )
            .unwrap();
            record(kind.name().to_string(), err);
        }

        // Input projection, classifier and the alpha path of every edge.
        let labels: Vec<usize> = (0..6).map(|i| (i + trial as usize) % 2).collect();
        let graph = Graph::new("fd", random_tensor(6, 4, &mut rng), a.clone(), labels, 2).unwrap();
        let ctx = GraphContext::new(&graph, 2).unwrap();
        let rows = std::sync::Arc::new((0..6).collect::<Vec<usize>>());
        let cfg = SearchConfig {
            layers: 2,
            hidden: D,
            dropout: 0.0,
            seed: trial,
            ..SearchConfig::default()
        };
        let mut net = Supernet::build(4, 2, &cfg).unwrap();
        for p in net.alpha_params_mut() {
            p.value = Tensor::scalar(rng.uniform_range(-1.0, 1.0));
        }
        net.tau = rng.uniform_range(0.5, 2.0);
        for (label, gumbel) in [("expectation", false), ("gumbel", true)] {
            let loss = |net: &Supernet| {
                let mut tape = Tape::new(0);
                let mut noise = SeededRng::new(trial, "acceptance/gumbel");
                let mode = if gumbel { Mode::Gumbel } else { Mode::Expectation };
                let logits = net.forward(&mut tape, &ctx, mode, false, &mut noise).unwrap();
                let l = tape.cross_entropy(logits, &ctx.labels, &rows).unwrap();
                (tape, l)
            };
            record(format!("alpha/{label}"), net_gradient_error(&mut net, alphas, &loss));
            if !gumbel {
                record("input+classifier".into(), net_gradient_error(&mut net, input_and_classifier, &loss));
            }
        }
    }
    let bad: Vec<String> = worst
        .iter()
        .filter(|w| !(w.1 < GRAD_TOL))
        .map(|w| format!("{}={:.2e}", w.0, w.1))
        .collect();
    let max = worst.iter().map(|w| w.1).fold(0.0, f64::max);
    Outcome::check(
        bad.is_empty(),
        format!("{} checks x 100 trials, max rel err {max:.2e}{}", worst.len(), issues(&bad)),
    )
}

fn c3_khop() -> Outcome {
    let mut mismatches = 0;
    let mut nonempty = 0;
    for g in 0..200u64 {
        let mut rng = SeededRng::new(g, "acceptance/khop");
        let n = 1 + rng.index(8);
        let p = rng.uniform();
        let edges = common::random_edges(n, p, &mut rng);
        let a = SparseMatrix::from_undirected_edges(n, &edges).unwrap();
        for k in 1..=3 {
            let got = khop_adjacency(&a, k).unwrap().to_dense();
            let want = common::brute_force_khop(n, &edges, k);
            nonempty += usize::from(got.data().iter().any(|&v| v != 0.0));
            for (r, row) in want.iter().enumerate() {
                for (c, &w) in row.iter().enumerate() {
                    if (got.get(r, c) != 0.0) != (w != 0) {
                        mismatches += 1;
                    }
                }
            }
        }
    }
    Outcome::check(
        mismatches == 0,
        format!("200 graphs x k=1..3, {mismatches} mismatched entries, {nonempty} non-empty hop matrices"),
    )
}

fn compact_fixture(seed: u64, plan: &ShrinkPlan) -> (Graph, SplitSet, Supernet, heg_core::shrinker::ShrinkOutcome) {
    let (graph, splits) = common::small_sbm(15, 3, seed);
    let ctx = GraphContext::new(&graph, 3).unwrap();
    let rows = SplitRows::new(&splits.splits[0]);
    let cfg = SearchConfig {
        hidden: 8,
        seed,
        ..SearchConfig::default()
    };
    let mut net = Supernet::build(graph.feature_dim(), graph.num_classes, &cfg).unwrap();
    let out = progressive_train(&mut net, plan, &ctx, &rows).unwrap();
    (graph, splits, net, out)
}

fn c4_shrinking() -> Outcome {
    let plan = ShrinkPlan {
        rounds: 3,
        drop_per_round: 3,
        epochs_per_round: 5,
        compact_epochs: 5,
    };
    let (_, _, net, out) = compact_fixture(4, &plan);
    let (_, _, again, out2) = compact_fixture(4, &plan);
    let mut problems = Vec::new();
    for e in &net.micro {
        if e.len() != 9 {
            problems.push(format!("{} has {} candidates", e.id, e.len()));
        }
    }
    let mut active = vec![AggOpKind::ALL.to_vec(); net.micro.len()];
    let mut decisions = 0;
    for round in &out.log.rounds {
        for layer in &round.layers {
            let before = &mut active[layer.layer - 1];
            let ranked: BTreeSet<_> = layer.ranking.iter().map(|e| e.0).collect();
            if ranked != before.iter().copied().collect() {
                problems.push(format!("round {} layer {}: ranking covers wrong set", round.round, layer.layer));
            }
            if replay_drop(&layer.ranking, plan.drop_per_round) != layer.dropped {
                problems.push(format!("round {} layer {}: replay differs", round.round, layer.layer));
            }
            before.retain(|k| !layer.dropped.contains(k));
            decisions += 1;
        }
    }
    for (e, want) in net.micro.iter().zip(&active) {
        if &e.kinds != want {
            problems.push(format!("{}: replayed survivors differ", e.id));
        }
    }
    let kinds = |n: &Supernet| n.micro.iter().map(|e| e.kinds.clone()).collect::<Vec<_>>();
    if out.log != out2.log || kinds(&net) != kinds(&again) {
        problems.push("rerun produced a different log".into());
    }
    Outcome::check(
        problems.is_empty(),
        format!("{decisions} drop decisions replayed{}", issues(&problems)),
    )
}

fn c5_mixed_edge() -> Outcome {
    let (graph, _, net, _) = {
        let plan = ShrinkPlan {
            rounds: 0,
            drop_per_round: 0,
            epochs_per_round: 0,
            compact_epochs: 3,
        };
        compact_fixture(5, &plan)
    };
    let mut problems = Vec::new();
    let mut rng = SeededRng::new(5, "acceptance/mixed");
    let mut checked = 0;
    for edge in &net.micro {
        for tau in [0.01, 0.5, 4.0, 8.0] {
            let n = edge.len();
            let noise: Vec<f64> = (0..n).map(|_| heg_core::numkit::gumbel_transform(rng.uniform())).collect();
            let mut sets = vec![edge.weights(tau, None, None), edge.weights(tau, Some(&noise), None)];
            for m in 0..n {
                sets.push(edge.weights(tau, None, Some(m)));
                sets.push(edge.weights(tau, Some(&noise), Some(m)));
            }
            for w in &sets {
                checked += 1;
                if (w.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
                    problems.push(format!("{} tau {tau}: sum {}", edge.id, w.iter().sum::<f64>()));
                }
            }
        }
    }
    // Discrete networks carry one candidate per edge.
    let genotype = heg_core::supernet::Genotype::uniform(AggOpKind::Fagcn, net.micro.len());
    let discrete = Supernet::from_genotype(&genotype, graph.feature_dim(), graph.num_classes, &net.config).unwrap();
    for id in discrete.edge_ids() {
        let w = discrete.edge_expectation_weights(id);
        checked += 1;
        if w != vec![1.0] {
            problems.push(format!("discrete {id}: {w:?}"));
        }
    }

    // Sharp temperature with unit alpha gaps.
    let mut sharp = net.micro[0].clone();
    let n = sharp.len();
    for (i, a) in sharp.alpha.iter_mut().enumerate() {
        a.value = Tensor::scalar(((i * 7) % n) as f64);
    }
    let w = sharp.expectation_weights(0.01);
    let top = sharp.alpha_values().iter().cloned().fold(f64::MIN, f64::max);
    let top_pos = sharp.alpha_values().iter().position(|&v| v == top).unwrap();
    if !(w[top_pos] > 0.999) {
        problems.push(format!("tau 0.01 max mass {}", w[top_pos]));
    }

    let cfg = SearchConfig::default();
    let t0 = temperature(0, 500, &cfg).unwrap();
    let t_end = temperature(500, 500, &cfg).unwrap();
    if t0 != 8.0 || t_end != 4.0 {
        problems.push(format!("temperature(0)={t0}, temperature(end)={t_end}"));
    }
    Outcome::check(
        problems.is_empty(),
        format!(
            "{checked} weight vectors, max mass {:.6} at tau 0.01, tau {t0}->{t_end}{}",
            w[top_pos],
            issues(&problems)
        ),
    )
}

/// Every non-forced edge's chosen candidate attains the best recorded score.
fn optimality_violations(report: &SelectionReport) -> Vec<String> {
    let minimize = report.criterion.minimizes();
    let mut out = Vec::new();
    for e in report.edges.iter().filter(|e| !e.forced) {
        let best = if minimize {
            e.scores.iter().cloned().fold(f64::INFINITY, f64::min)
        } else {
            e.scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        };
        let at = e.candidates.iter().position(|c| *c == e.chosen).unwrap();
        if e.scores[at] != best {
            out.push(format!("{} {}: chose {} ({}) but best is {best}", report.criterion, e.edge, e.chosen, e.scores[at]));
        }
    }
    out
}

fn c6_selection() -> Outcome {
    let plan = ShrinkPlan {
        rounds: 3,
        drop_per_round: 3,
        epochs_per_round: 10,
        compact_epochs: 20,
    };
    let (graph, splits, net, _) = compact_fixture(6, &plan);
    let ctx = GraphContext::new(&graph, 3).unwrap();
    let rows = SplitRows::new(&splits.splits[0]);
    let mut problems = Vec::new();
    let mut edges = 0;
    for criterion in Criterion::ALL {
        let opts = SelectOptions {
            criterion,
            seed: 6,
            ..SelectOptions::default()
        };
        let (genotype, report) = select(&net, &ctx, &rows, &opts).unwrap();
        edges += report.edges.len();
        problems.extend(optimality_violations(&report));
        if genotype.num_layers() != net.micro.len() {
            problems.push(format!("{criterion}: genotype has {} layers", genotype.num_layers()));
        }
    }

    let truth = one_hot(&ctx.labels, ctx.num_classes, None);
    let scorer = Scorer::new(&ctx, &rows, HeteNodes::TrainVal);
    let own = scorer.hete_distance(&truth);
    if own != 0.0 {
        problems.push(format!("D_hete of ground truth = {own}"));
    }

    // Two nodes of different classes joined by one edge.
    let a = SparseMatrix::from_undirected_edges(2, &[(0, 1)]).unwrap();
    let y = one_hot(&[0, 1], 2, None);
    let h = heterophily_matrix(&y, &a, &[true, true]).values;
    let expected = Tensor::from_rows(&[[0.0, 1.0], [1.0, 0.0]]).unwrap();
    if h != expected {
        problems.push(format!("H = {h:?}"));
    }
    let swapped = one_hot(&[1, 0], 2, None);
    let d = d_hete(&swapped, &y, &a, &[true, true]);
    if d != 0.0 {
        problems.push(format!("swapped prediction D_hete = {d}"));
    }
    Outcome::check(
        problems.is_empty(),
        format!("{edges} edge decisions over 4 criteria{}", issues(&problems)),
    )
}

fn c7_end_to_end() -> Outcome {
    let synth = SynthConfig {
        seed: 7,
        splits: 5,
        ..SynthConfig::default()
    };
    let (graph, splits) = synth.generate().unwrap();
    let gamma = dataset_stats(&graph).node_homophily.unwrap();
    let cfg = RunConfig {
        seeds: vec![7],
        shrink: ShrinkPlan {
            rounds: 3,
            drop_per_round: 3,
            epochs_per_round: 50,
            compact_epochs: 200,
        },
        tune: TuneConfig { iters: 10, split: 0 },
        train: TrainConfig::default(),
        eval_splits: Some(5),
        ..RunConfig::default()
    };
    let started = Instant::now();
    let summary = run_pipeline(&graph, &splits, &cfg).unwrap();
    let secs = started.elapsed().as_secs_f64();
    let searched = summary.searched.report.mean.unwrap();
    let gcn = summary.gcn_baseline.report.mean.unwrap();
    let mlp = summary.mlp_baseline.report.mean.unwrap();
    let ok = gamma <= 0.15 && secs < 1800.0 && searched >= gcn + 0.05 && searched >= mlp + 0.05;
    Outcome::check(
        ok,
        format!(
            "gamma {gamma:.3}; searched {} = {:.1}%, all-GCN {:.1}%, MLP {:.1}%; {secs:.0}s",
            summary.search.best().genotype,
            100.0 * searched,
            100.0 * gcn,
            100.0 * mlp
        ),
    )
}

fn c8_cornell() -> Outcome {
    let Some(root) = data_dir() else {
        return Outcome::skip("HEG_DATA_DIR not set; Cornell with its public splits unavailable");
    };
    let (graph, splits) = match load_dataset(root.join("cornell")) {
        Ok(x) => x,
        Err(e) => return Outcome::skip(format!("cornell: {e}")),
    };
    let out = tempfile::tempdir().unwrap();
    let cfg = RunConfig {
        seeds: vec![0, 1, 2],
        tune: TuneConfig { iters: 100, split: 0 },
        out: Some(out.path().to_path_buf()),
        ..RunConfig::default()
    };
    let summary = run_pipeline(&graph, &splits, &cfg).unwrap();
    heg_core::pipeline::write_run(&summary, out.path()).unwrap();
    let mean = summary.searched.report.mean.unwrap();
    Outcome::check(
        (100.0 * mean - 83.51).abs() <= 8.0,
        format!("mean test accuracy {:.2}% (target 83.51 +- 8)", 100.0 * mean),
    )
}

fn c9_ablation() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let synth = SynthConfig {
        per_class: 20,
        splits: 2,
        seed: 9,
        ..SynthConfig::default()
    };
    let data = tmp.path().join("data");
    heg_core::pipeline::synthesize(&synth, &data).unwrap();
    let (graph, splits) = load_dataset(&data).unwrap();
    let cfg = RunConfig {
        seeds: vec![9],
        search: SearchConfig {
            hidden: 16,
            ..SearchConfig::default()
        },
        shrink: ShrinkPlan {
            rounds: 3,
            drop_per_round: 3,
            epochs_per_round: 10,
            compact_epochs: 20,
        },
        ..RunConfig::default()
    };
    let search_dir = tmp.path().join("search");
    write_search(&run_search(&graph, &splits, &cfg).unwrap(), &search_dir).unwrap();

    let out_dir = tmp.path().join("ablation");
    let status = Command::new(env!("CARGO_BIN_EXE_heg"))
        .args(["select", "--all-criteria", "--seed", "9", "--dataset"])
        .arg(&data)
        .arg("--checkpoint")
        .arg(search_dir.join("seed-9/supernet.json"))
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    if !status.status.success() {
        return Outcome::check(false, String::from_utf8_lossy(&status.stderr).to_string());
    }
    let mut problems = Vec::new();
    let mut genotypes = Vec::new();
    for criterion in Criterion::ALL {
        let g: Result<heg_core::supernet::Genotype, _> = read_json(&out_dir.join(format!("genotype-{criterion}.json")));
        let r: Result<SelectionReport, _> = read_json(&out_dir.join(format!("selection-{criterion}.json")));
        match (g, r) {
            (Ok(g), Ok(r)) => {
                if r.criterion != criterion {
                    problems.push(format!("{criterion}: report names {}", r.criterion));
                }
                problems.extend(optimality_violations(&r));
                genotypes.push(g);
            }
            _ => problems.push(format!("{criterion}: missing outputs")),
        }
    }
    let ckpt: Checkpoint = read_json(&search_dir.join("seed-9/supernet.json")).unwrap();
    let distinct: BTreeSet<String> = genotypes.iter().map(|g| g.to_string()).collect();
    Outcome::check(
        genotypes.len() == 4 && problems.is_empty() && ckpt.supernet.micro.iter().all(|e| e.len() == 9),
        format!(
            "4 genotypes ({} distinct) from one checkpoint{}",
            distinct.len(),
            issues(&problems)
        ),
    )
}
