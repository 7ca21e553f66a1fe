mod common;

use heg_core::numkit::{SeededRng, SparseMatrix, Tape};
use heg_core::opspace::{AggOpKind, FuserKind, GateKind, HopGraph};
use heg_core::supernet::{
    bilevel_epoch, EdgeId, Genotype, GraphContext, Mode, SearchConfig, SearchOptimizers, SplitRows, Supernet,
};
use proptest::prelude::*;

fn config(seed: u64) -> SearchConfig {
    SearchConfig {
        hidden: 8,
        seed,
        ..SearchConfig::default()
    }
}

fn fixture(seed: u64) -> (GraphContext, SplitRows, Supernet) {
    let (g, s) = common::small_sbm(10, 3, seed);
    let ctx = GraphContext::new(&g, 3).unwrap();
    let net = Supernet::build(g.feature_dim(), g.num_classes, &config(seed)).unwrap();
    (ctx, SplitRows::new(&s.splits[0]), net)
}

#[test]
fn wiring_and_candidate_counts() {
    let (_, _, net) = fixture(1);
    assert_eq!(net.num_edges(), 6);
    assert_eq!(net.micro.len(), 3);
    assert_eq!(net.gates.len(), 2);
    for e in &net.micro {
        assert_eq!(e.len(), 18);
    }
    for e in &net.gates {
        assert_eq!(e.kinds, vec![GateKind::Skip, GateKind::Zero]);
    }
    assert_eq!(net.fuser.kinds, FuserKind::ALL.to_vec());
}

#[test]
fn builds_are_deterministic() {
    let (ctx, _, mut a) = fixture(4);
    let (_, _, mut b) = fixture(4);
    for (x, y) in a.alpha_params_mut().into_iter().zip(b.alpha_params_mut()) {
        assert_eq!(x.value, y.value);
        assert!(x.value.item().abs() <= 1e-3);
    }
    for (x, y) in a.weight_params_mut().into_iter().zip(b.weight_params_mut()) {
        assert_eq!(x.value, y.value);
    }
    assert_eq!(
        a.logits(&ctx, Mode::Expectation).unwrap(),
        b.logits(&ctx, Mode::Expectation).unwrap()
    );
}

#[test]
fn logits_have_class_width() {
    let (ctx, _, net) = fixture(2);
    let logits = net.logits(&ctx, Mode::Expectation).unwrap();
    assert_eq!(logits.shape(), (30, 3));
}

#[test]
fn discrete_mode_equals_standalone_model() {
    let (g, _) = common::small_sbm(10, 3, 3);
    let ctx = GraphContext::new(&g, 3).unwrap();
    let cfg = config(3);
    let net = Supernet::build(g.feature_dim(), 3, &cfg).unwrap();
    let genotype = Genotype::new(
        vec![AggOpKind::Fagcn, AggOpKind::GatSym, AggOpKind::GcnCheb],
        vec![GateKind::Zero, GateKind::Skip],
        FuserKind::Lstm,
    );
    let solo = Supernet::from_genotype(&genotype, g.feature_dim(), 3, &cfg).unwrap();
    for train in [false, true] {
        let mut t1 = Tape::new(9);
        let mut t2 = Tape::new(9);
        let mut r1 = SeededRng::new(0, "n");
        let mut r2 = SeededRng::new(0, "n");
        let a = net.forward(&mut t1, &ctx, Mode::Discrete(&genotype), train, &mut r1).unwrap();
        let b = solo.forward(&mut t2, &ctx, Mode::Expectation, train, &mut r2).unwrap();
        assert_eq!(t1.value(a), t2.value(b), "train={train}");
    }
    assert!(solo.genotype().unwrap().same_architecture(&genotype));
}

#[test]
fn leave_one_out_on_two_candidates_equals_survivor() {
    let (g, _) = common::small_sbm(10, 3, 5);
    let ctx = GraphContext::new(&g, 3).unwrap();
    let cfg = config(5);
    let layers = vec![
        vec![AggOpKind::Gcn, AggOpKind::Sgc],
        vec![AggOpKind::Fagcn],
        vec![AggOpKind::Gat],
    ];
    let gates = vec![vec![GateKind::Skip], vec![GateKind::Skip]];
    let net = Supernet::with_candidates(g.feature_dim(), 3, &cfg, &layers, &gates, &[FuserKind::Max]).unwrap();
    let loo = net
        .logits(&ctx, Mode::LeaveOneOut { edge: EdgeId::Micro(1), position: 0 })
        .unwrap();
    let survivor = Genotype::new(
        vec![AggOpKind::Sgc, AggOpKind::Fagcn, AggOpKind::Gat],
        vec![GateKind::Skip, GateKind::Skip],
        FuserKind::Max,
    );
    assert_eq!(loo, net.logits(&ctx, Mode::Discrete(&survivor)).unwrap());
}

#[test]
fn leave_one_out_on_single_candidate_fails() {
    let (g, _) = common::small_sbm(10, 3, 5);
    let ctx = GraphContext::new(&g, 3).unwrap();
    let genotype = Genotype::uniform(AggOpKind::Gcn, 3);
    let net = Supernet::from_genotype(&genotype, g.feature_dim(), 3, &config(5)).unwrap();
    assert!(net
        .logits(&ctx, Mode::LeaveOneOut { edge: EdgeId::Fuser, position: 0 })
        .is_err());
}

#[test]
fn layer_l_reads_hop_l() {
    let (g, _) = common::small_sbm(10, 3, 6);
    let cfg = config(6);
    let genotype = Genotype::uniform(AggOpKind::Gcn, 3);
    let net = Supernet::from_genotype(&genotype, g.feature_dim(), 3, &cfg).unwrap();
    let ctx = GraphContext::new(&g, 4).unwrap();
    let base = net.logits(&ctx, Mode::Expectation).unwrap();
    let empty = HopGraph::new(&SparseMatrix::empty(30, 30));
    for k in 1..=4 {
        let mut altered = ctx.clone();
        altered.hops[k - 1] = empty.clone();
        let changed = net.logits(&altered, Mode::Expectation).unwrap() != base;
        assert_eq!(changed, k <= 3 && !ctx.hop(k).adjacency.values().is_empty(), "hop {k}");
    }
}

#[test]
fn weight_step_leaves_alpha_and_zero_lr_freezes_it() {
    let (g, s) = common::small_sbm(10, 3, 7);
    let ctx = GraphContext::new(&g, 3).unwrap();
    let rows = SplitRows::new(&s.splits[0]);
    let cfg = SearchConfig {
        lr_alpha: 0.0,
        wd_alpha: 0.0,
        ..config(7)
    };
    let mut net = Supernet::build(g.feature_dim(), 3, &cfg).unwrap();
    let before: Vec<_> = net.alpha_params_mut().iter().map(|p| p.value.clone()).collect();
    let w_before: Vec<_> = net.weight_params_mut().iter().map(|p| p.value.clone()).collect();
    let mut opt = SearchOptimizers::new(&net);
    for _ in 0..3 {
        bilevel_epoch(&mut net, &ctx, &rows, &mut opt).unwrap();
    }
    let after: Vec<_> = net.alpha_params_mut().iter().map(|p| p.value.clone()).collect();
    assert_eq!(before, after);
    let w_after: Vec<_> = net.weight_params_mut().iter().map(|p| p.value.clone()).collect();
    assert_ne!(w_before, w_after);
}

#[test]
fn parameter_groups_are_disjoint() {
    let (_, _, mut net) = fixture(8);
    let w = net.weight_ids();
    let a = net.alpha_ids();
    assert!(w.iter().all(|id| !a.contains(id)));
    let mut all = w.clone();
    all.extend(&a);
    all.sort();
    all.dedup();
    assert_eq!(all.len(), w.len() + a.len());
}

#[test]
fn search_is_reproducible() {
    let run = || {
        let (ctx, rows, mut net) = fixture(9);
        let mut opt = SearchOptimizers::new(&net);
        (0..4).map(|_| bilevel_epoch(&mut net, &ctx, &rows, &mut opt).unwrap()).collect::<Vec<_>>()
    };
    assert_eq!(run(), run());
}

#[test]
fn separable_toy_graph_trains_below_chance_loss() {
    use heg_core::graphcore::{Graph, Split};
    use heg_core::numkit::Tensor;
    // Two classes, features = one-hot class, edges only across classes.
    let n = 20;
    let labels: Vec<usize> = (0..n).map(|i| i % 2).collect();
    let mut x = Tensor::zeros(n, 2);
    for (i, &l) in labels.iter().enumerate() {
        x.set(i, l, 1.0);
    }
    let edges: Vec<(usize, usize)> = (0..n - 1).map(|i| (i, i + 1)).collect();
    let g = Graph::new("toy", x, SparseMatrix::from_undirected_edges(n, &edges).unwrap(), labels, 2).unwrap();
    let split = Split {
        train: (0..10).collect(),
        val: (10..16).collect(),
        test: (16..20).collect(),
    };
    let ctx = GraphContext::new(&g, 2).unwrap();
    let rows = SplitRows::new(&split);
    let cfg = SearchConfig {
        layers: 2,
        hidden: 8,
        dropout: 0.0,
        ..SearchConfig::default()
    };
    let mut net = Supernet::build(2, 2, &cfg).unwrap();
    let mut opt = SearchOptimizers::new(&net);
    let mut last = f64::INFINITY;
    for _ in 0..100 {
        last = bilevel_epoch(&mut net, &ctx, &rows, &mut opt).unwrap().0;
    }
    assert!(last < 2f64.ln(), "train loss {last}");
}

#[test]
fn alpha_gradient_matches_finite_differences() {
    let (ctx, rows, mut net) = fixture(10);
    net.config.dropout = 0.0;
    net.tau = 1.5;
    let loss_of = |net: &Supernet| {
        let mut tape = Tape::new(0);
        let mut rng = SeededRng::new(0, "unused");
        let logits = net.forward(&mut tape, &ctx, Mode::Expectation, false, &mut rng).unwrap();
        let loss = tape.cross_entropy(logits, &ctx.labels, &rows.val).unwrap();
        (tape, loss)
    };
    let (tape, loss) = loss_of(&net);
    let grads = tape.backward(loss).unwrap();
    net.zero_grad();
    grads.accumulate(net.alpha_params_mut());
    let analytic: Vec<f64> = net.alpha_params_mut().iter().map(|p| p.grad.item()).collect();
    let h = 1e-5;
    let count = analytic.len();
    for i in (0..count).step_by(3) {
        let eval = |net: &mut Supernet, delta: f64| {
            net.alpha_params_mut()[i].value.data_mut()[0] += delta;
            let (tape, loss) = loss_of(net);
            let v = tape.value(loss).item();
            net.alpha_params_mut()[i].value.data_mut()[0] -= delta;
            v
        };
        let numeric = (eval(&mut net, h) - eval(&mut net, -h)) / (2.0 * h);
        let err = (analytic[i] - numeric).abs() / analytic[i].abs().max(1.0);
        assert!(err < 1e-4, "alpha {i}: {} vs {numeric}", analytic[i]);
    }
}

#[test]
fn checkpoint_round_trip_preserves_logits() {
    let (ctx, rows, mut net) = fixture(11);
    let mut opt = SearchOptimizers::new(&net);
    bilevel_epoch(&mut net, &ctx, &rows, &mut opt).unwrap();
    let json = serde_json::to_string(&net).unwrap();
    let back: Supernet = serde_json::from_str(&json).unwrap();
    assert_eq!(
        net.logits(&ctx, Mode::Expectation).unwrap(),
        back.logits(&ctx, Mode::Expectation).unwrap()
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mixed_weights_sum_to_one(alphas in prop::collection::vec(-5.0f64..5.0, 1..18),
                                tau in 0.01f64..10.0, seed in 0u64..1000, mask in 0usize..18) {
        use heg_core::numkit::{gumbel_sample, Param, Tensor};
        use heg_core::opspace::OpParams;
        use heg_core::supernet::MixedEdge;
        let k = alphas.len();
        let edge = MixedEdge::new(
            EdgeId::Micro(1),
            AggOpKind::ALL[..k].to_vec(),
            alphas.iter().map(|&a| Param::new(Tensor::scalar(a))).collect(),
            (0..k).map(|_| OpParams { params: vec![] }).collect(),
        );
        let noise = gumbel_sample(&mut SeededRng::new(seed, "g"), 1, k).into_data();
        let mut cases = vec![edge.weights(tau, Some(&noise), None), edge.expectation_weights(tau)];
        if k > 1 {
            cases.push(edge.weights(tau, None, Some(mask % k)));
        }
        for w in cases {
            prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            prop_assert!(w.iter().all(|&x| x >= 0.0));
        }
    }
}
