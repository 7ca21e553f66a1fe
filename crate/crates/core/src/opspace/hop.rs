use std::sync::Arc;

use crate::graphcore::sym_norm;
use crate::numkit::{EdgeIndex, SparseMatrix, Tensor};

/// Precomputed operators for one hop's neighbor matrix.
#[derive(Clone, Debug)]
pub struct HopGraph {
    /// Binary, symmetric, self-loop-free neighbor matrix.
    pub adjacency: Arc<SparseMatrix>,
    /// `D^{-1/2} A D^{-1/2}`.
    pub norm: Arc<SparseMatrix>,
    /// Row-mean operator `D^{-1} A`.
    pub mean: Arc<SparseMatrix>,
    pub edges: Arc<EdgeIndex>,
    pub edge_dst: Arc<Vec<usize>>,
    pub edge_src: Arc<Vec<usize>>,
    /// `1 / sqrt(d_v d_u)` per edge, `E x 1`.
    pub edge_norm: Arc<Tensor>,
    pub degrees: Vec<f64>,
}

impl HopGraph {
    /// Builds from any symmetric adjacency; the diagonal is dropped.
    pub fn new(adjacency: &SparseMatrix) -> Self {
        let adjacency = adjacency.without_diagonal();
        let degrees = adjacency.row_sums();
        let norm = sym_norm(&adjacency);
        let mean = adjacency.map_values(|r, _, v| v / degrees[r]);
        let edges = adjacency.edge_index();
        let edge_norm = Tensor::column(
            &edges
                .dst
                .iter()
                .zip(&edges.src)
                .map(|(&v, &u)| 1.0 / (degrees[v] * degrees[u]).sqrt())
                .collect::<Vec<_>>(),
        );
        HopGraph {
            edge_dst: Arc::new(edges.dst.clone()),
            edge_src: Arc::new(edges.src.clone()),
            edges: Arc::new(edges),
            adjacency: Arc::new(adjacency),
            norm: Arc::new(norm),
            mean: Arc::new(mean),
            edge_norm: Arc::new(edge_norm),
            degrees,
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.adjacency.rows()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }
}
