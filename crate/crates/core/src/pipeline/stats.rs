use serde::{Deserialize, Serialize};

use crate::graphcore::{node_homophily, Graph};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub name: String,
    pub nodes: usize,
    /// Undirected edges, self-loops excluded.
    pub edges: usize,
    pub features: usize,
    pub classes: usize,
    /// `None` when every node is isolated.
    pub node_homophily: Option<f64>,
}

pub fn dataset_stats(graph: &Graph) -> DatasetStats {
    DatasetStats {
        name: graph.name.clone(),
        nodes: graph.num_nodes(),
        edges: graph.num_edges(),
        features: graph.feature_dim(),
        classes: graph.num_classes,
        node_homophily: node_homophily(graph).ok(),
    }
}
