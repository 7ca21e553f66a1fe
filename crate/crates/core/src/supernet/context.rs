use std::sync::Arc;

use crate::graphcore::{Graph, GraphError, KHopSet, Split};
use crate::numkit::Tensor;
use crate::opspace::HopGraph;

/// Graph tensors shared by every forward pass: features, labels and one
/// [`HopGraph`] per hop `1..=K`.
#[derive(Clone, Debug)]
pub struct GraphContext {
    pub features: Arc<Tensor>,
    pub labels: Arc<Vec<usize>>,
    pub num_classes: usize,
    pub hops: Vec<HopGraph>,
}

impl GraphContext {
    pub fn new(graph: &Graph, max_hop: usize) -> Result<Self, GraphError> {
        let khop = KHopSet::build(&graph.adjacency, max_hop)?;
        Ok(GraphContext {
            features: Arc::new(graph.features.clone()),
            labels: Arc::new(graph.labels.clone()),
            num_classes: graph.num_classes,
            hops: khop.hops.iter().map(HopGraph::new).collect(),
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.features.rows()
    }

    pub fn feature_dim(&self) -> usize {
        self.features.cols()
    }

    /// Neighbor operators of hop `k` (1-based).
    pub fn hop(&self, k: usize) -> &HopGraph {
        &self.hops[k - 1]
    }
}

/// Node index lists of one split, shareable with the tape.
#[derive(Clone, Debug)]
pub struct SplitRows {
    pub train: Arc<Vec<usize>>,
    pub val: Arc<Vec<usize>>,
    pub test: Arc<Vec<usize>>,
}

impl SplitRows {
    pub fn new(split: &Split) -> Self {
        SplitRows {
            train: Arc::new(split.train.clone()),
            val: Arc::new(split.val.clone()),
            test: Arc::new(split.test.clone()),
        }
    }

    /// Train and validation nodes, sorted.
    pub fn labeled(&self) -> Vec<usize> {
        let mut rows: Vec<usize> = self.train.iter().chain(self.val.iter()).copied().collect();
        rows.sort_unstable();
        rows
    }
}

/// Fraction of `rows` whose argmax prediction matches the label (0 for no rows).
pub fn accuracy(logits: &Tensor, labels: &[usize], rows: &[usize]) -> f64 {
    if rows.is_empty() {
        return 0.0;
    }
    let pred = logits.argmax_rows();
    let hits = rows.iter().filter(|&&r| pred[r] == labels[r]).count();
    hits as f64 / rows.len() as f64
}
