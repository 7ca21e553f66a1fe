//! Browser bindings for three small operations: k-hop neighbor sets,
//! temperature-controlled mixing weights, and SBM heterophily statistics.
//!
//! Each export takes plain arguments and returns a JSON string. The
//! `*_json` functions hold the logic and are usable natively.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use heg_core::graphcore::{
    expected_sbm_homophily, heterophily_matrix, khop_adjacency, node_homophily, one_hot, sbm_generate, FeatureSpec,
};
use heg_core::numkit::{gumbel_transform, softmax_slice, SeededRng, SparseMatrix, Tensor};

#[derive(Serialize)]
struct HopReport {
    nodes: usize,
    /// `hops[k - 1][v]` lists the k-hop neighbors of `v`.
    hops: Vec<Vec<Vec<usize>>>,
}

#[derive(Serialize)]
struct MixReport {
    tau: f64,
    expectation: Vec<f64>,
    gumbel: Vec<f64>,
    noise: Vec<f64>,
}

#[derive(Serialize)]
struct SbmReport {
    nodes: usize,
    edges: usize,
    node_homophily: Option<f64>,
    expected_homophily: f64,
    heterophily_matrix: Vec<Vec<f64>>,
}

fn parse_edges(text: &str) -> Result<Vec<(usize, usize)>, String> {
    let mut edges = Vec::new();
    for token in text.split([',', ';', '\n']).map(str::trim).filter(|t| !t.is_empty()) {
        let (u, v) = token
            .split_once(['-', ' '])
            .ok_or_else(|| format!("edge {token:?} is not of the form u-v"))?;
        let parse = |s: &str| s.trim().parse::<usize>().map_err(|e| format!("edge {token:?}: {e}"));
        edges.push((parse(u)?, parse(v)?));
    }
    Ok(edges)
}

/// k-hop neighbor lists for `k = 1..=max_hop` of the graph given as
/// `"0-1, 1-2, ..."` on `nodes` nodes.
pub fn khop_json(nodes: usize, edges: &str, max_hop: usize) -> Result<String, String> {
    if nodes == 0 || nodes > 200 {
        return Err("node count must be in 1..=200".into());
    }
    if !(1..=5).contains(&max_hop) {
        return Err("max hop must be in 1..=5".into());
    }
    let a = SparseMatrix::from_undirected_edges(nodes, &parse_edges(edges)?).map_err(|e| e.to_string())?;
    let mut hops = Vec::with_capacity(max_hop);
    for k in 1..=max_hop {
        let m = khop_adjacency(&a, k).map_err(|e| e.to_string())?;
        let rows = (0..nodes)
            .map(|v| m.col_indices()[m.row_ptr()[v]..m.row_ptr()[v + 1]].to_vec())
            .collect();
        hops.push(rows);
    }
    serde_json::to_string(&HopReport { nodes, hops }).map_err(|e| e.to_string())
}

/// Softmax of `alpha / tau` and of `(alpha + g) / tau` with Gumbel noise
/// `g` drawn from `seed`; `alphas` is a comma-separated list.
pub fn mixing_json(alphas: &str, tau: f64, seed: u64) -> Result<String, String> {
    let alpha: Vec<f64> = alphas
        .split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().map_err(|e| format!("{t:?}: {e}")))
        .collect::<Result<_, _>>()?;
    if alpha.is_empty() || alpha.iter().any(|a| !a.is_finite()) {
        return Err("give at least one finite alpha".into());
    }
    if !(tau > 0.0 && tau.is_finite()) {
        return Err("temperature must be positive".into());
    }
    let mut rng = SeededRng::new(seed, "demo/gumbel");
    let noise: Vec<f64> = alpha.iter().map(|_| gumbel_transform(rng.uniform())).collect();
    let scaled: Vec<f64> = alpha.iter().map(|a| a / tau).collect();
    let noisy: Vec<f64> = alpha.iter().zip(&noise).map(|(a, g)| (a + g) / tau).collect();
    let report = MixReport {
        tau,
        expectation: softmax_slice(&scaled),
        gumbel: softmax_slice(&noisy),
        noise,
    };
    serde_json::to_string(&report).map_err(|e| e.to_string())
}

/// Samples an SBM with `classes` blocks of `per_class` nodes and reports
/// node homophily and the class-to-class heterophily matrix.
pub fn sbm_json(per_class: usize, classes: usize, p_intra: f64, p_inter: f64, seed: u64) -> Result<String, String> {
    if per_class == 0 || classes == 0 || per_class * classes > 2000 {
        return Err("need 1..=2000 nodes in total".into());
    }
    let mut b = Tensor::filled(classes, classes, p_inter);
    for i in 0..classes {
        b.set(i, i, p_intra);
    }
    let spec = FeatureSpec::random_means(classes, 2, 1.0, 1.0, &mut SeededRng::new(seed, "demo/means"));
    let graph = sbm_generate(&vec![per_class; classes], &b, &spec, seed).map_err(|e| e.to_string())?;
    let n = graph.num_nodes();
    let y = one_hot(&graph.labels, classes, None);
    let h = heterophily_matrix(&y, &graph.adjacency, &vec![true; n]).values;
    let report = SbmReport {
        nodes: n,
        edges: graph.num_edges(),
        node_homophily: node_homophily(&graph).ok(),
        expected_homophily: expected_sbm_homophily(per_class, classes, p_intra, p_inter),
        heterophily_matrix: (0..classes).map(|r| h.row(r).to_vec()).collect(),
    };
    serde_json::to_string(&report).map_err(|e| e.to_string())
}

#[wasm_bindgen]
pub fn khop(nodes: usize, edges: &str, max_hop: usize) -> Result<String, JsValue> {
    khop_json(nodes, edges, max_hop).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn mixing(alphas: &str, tau: f64, seed: u32) -> Result<String, JsValue> {
    mixing_json(alphas, tau, u64::from(seed)).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn sbm(per_class: usize, classes: usize, p_intra: f64, p_inter: f64, seed: u32) -> Result<String, JsValue> {
    sbm_json(per_class, classes, p_intra, p_inter, u64::from(seed)).map_err(|e| JsValue::from_str(&e))
}
