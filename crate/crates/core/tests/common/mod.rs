#![allow(dead_code)]

use heg_core::graphcore::{generate_splits, sbm_generate, FeatureSpec, Graph, SplitRatios, SplitSet};
use heg_core::numkit::{SeededRng, Tensor};

pub fn mixing(p: usize, intra: f64, inter: f64) -> Tensor {
    let mut b = Tensor::filled(p, p, inter);
    for i in 0..p {
        b.set(i, i, intra);
    }
    b
}

/// Small heterophilous SBM with informative features.
pub fn small_sbm(per_class: usize, classes: usize, seed: u64) -> (Graph, SplitSet) {
    let spec = FeatureSpec::random_means(classes, 6, 1.0, 0.8, &mut SeededRng::new(seed, "means"));
    let g = sbm_generate(&vec![per_class; classes], &mixing(classes, 0.05, 0.25), &spec, seed).unwrap();
    let s = generate_splits(&g, SplitRatios::default(), 2, seed).unwrap();
    (g, s)
}

/// Dense 0/1 matrix of k-hop neighbors by breadth-first distances and explicit
/// walk enumeration on the adjacency with self-loops removed.
pub fn brute_force_khop(n: usize, edges: &[(usize, usize)], k: usize) -> Vec<Vec<u8>> {
    let mut adj = vec![vec![false; n]; n];
    for &(u, v) in edges {
        if u != v {
            adj[u][v] = true;
            adj[v][u] = true;
        }
    }
    let mut out = vec![vec![0u8; n]; n];
    for s in 0..n {
        let mut dist = vec![usize::MAX; n];
        dist[s] = 0;
        let mut queue = std::collections::VecDeque::from([s]);
        while let Some(x) = queue.pop_front() {
            for y in 0..n {
                if adj[x][y] && dist[y] == usize::MAX {
                    dist[y] = dist[x] + 1;
                    queue.push_back(y);
                }
            }
        }
        let mut walks = vec![0usize; n];
        count_walks(&adj, s, k, &mut walks);
        for t in 0..n {
            if t != s && dist[t] == k && walks[t] >= k {
                out[s][t] = 1;
            }
        }
    }
    out
}

fn count_walks(adj: &[Vec<bool>], at: usize, left: usize, ends: &mut [usize]) {
    if left == 0 {
        ends[at] += 1;
        return;
    }
    for next in 0..adj.len() {
        if adj[at][next] {
            count_walks(adj, next, left - 1, ends);
        }
    }
}

/// Random undirected edge list on `n` nodes, self-loops included.
pub fn random_edges(n: usize, p: f64, rng: &mut SeededRng) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u..n {
            if rng.uniform() < p {
                edges.push((u, v));
            }
        }
    }
    edges
}
