use std::collections::VecDeque;

use super::GraphError;
use crate::numkit::SparseMatrix;

/// Self-loop-free k-hop neighbor sets for hops `1..=K`.
#[derive(Clone, Debug)]
pub struct KHopSet {
    pub hops: Vec<SparseMatrix>,
}

impl KHopSet {
    pub fn build(adjacency: &SparseMatrix, max_hop: usize) -> Result<Self, GraphError> {
        if max_hop == 0 {
            return Err(GraphError::InvalidHop(0));
        }
        let hops = (1..=max_hop)
            .map(|k| khop_adjacency(adjacency, k))
            .collect::<Result<_, _>>()?;
        Ok(KHopSet { hops })
    }

    pub fn max_hop(&self) -> usize {
        self.hops.len()
    }

    /// Neighbor matrix for hop `k` (1-based).
    pub fn hop(&self, k: usize) -> &SparseMatrix {
        &self.hops[k - 1]
    }
}

/// Binary matrix of k-hop neighbors: `u` is a k-hop neighbor of `v` when
/// their shortest-path distance is exactly `k` and at least `k` distinct
/// length-`k` walks join them. Walks and distances are taken on the
/// adjacency with self-loops removed; the diagonal is always zero.
pub fn khop_adjacency(adjacency: &SparseMatrix, k: usize) -> Result<SparseMatrix, GraphError> {
    if k == 0 {
        return Err(GraphError::InvalidHop(k));
    }
    let base = adjacency.without_diagonal().map_values(|_, _, _| 1.0);
    if k == 1 {
        return Ok(base);
    }
    let n = base.rows();
    let mut dist = vec![usize::MAX; n];
    let mut counts = vec![0u64; n];
    let mut next = vec![0u64; n];
    let mut triplets = Vec::new();
    let mut queue = VecDeque::new();
    let mut seen_list: Vec<usize> = Vec::new();
    let mut frontier: Vec<usize> = Vec::new();
    let mut next_frontier: Vec<usize> = Vec::new();

    for v in 0..n {
        // Distances up to k.
        dist[v] = 0;
        seen_list.push(v);
        queue.push_back(v);
        while let Some(w) = queue.pop_front() {
            if dist[w] == k {
                continue;
            }
            for (u, _) in base.row(w) {
                if dist[u] == usize::MAX {
                    dist[u] = dist[w] + 1;
                    seen_list.push(u);
                    queue.push_back(u);
                }
            }
        }

        // Length-k walk counts from v.
        counts[v] = 1;
        frontier.push(v);
        for _ in 0..k {
            for &w in &frontier {
                let c = counts[w];
                for (u, _) in base.row(w) {
                    if next[u] == 0 {
                        next_frontier.push(u);
                    }
                    next[u] = next[u].saturating_add(c);
                }
            }
            for &w in &frontier {
                counts[w] = 0;
            }
            std::mem::swap(&mut counts, &mut next);
            std::mem::swap(&mut frontier, &mut next_frontier);
            next_frontier.clear();
        }

        for &u in &frontier {
            if dist[u] == k && counts[u] >= k as u64 {
                triplets.push((v, u, 1.0));
            }
            counts[u] = 0;
        }
        frontier.clear();
        for &u in &seen_list {
            dist[u] = usize::MAX;
        }
        seen_list.clear();
    }
    Ok(SparseMatrix::from_triplets(n, n, triplets)?)
}

/// `D^{-1/2} A D^{-1/2}` with degrees taken as row sums; zero-degree rows
/// and columns stay zero.
pub fn sym_norm(adjacency: &SparseMatrix) -> SparseMatrix {
    let inv_sqrt: Vec<f64> = adjacency
        .row_sums()
        .into_iter()
        .map(|d| if d > 0.0 { 1.0 / d.sqrt() } else { 0.0 })
        .collect();
    adjacency.map_values(|r, c, v| v * inv_sqrt[r] * inv_sqrt[c])
}
