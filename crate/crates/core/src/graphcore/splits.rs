use serde::{Deserialize, Serialize};

use super::{Graph, GraphError, Split, SplitSet};
use crate::numkit::SeededRng;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitRatios {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        SplitRatios {
            train: 0.48,
            val: 0.32,
            test: 0.20,
        }
    }
}

/// Per-class stratified random splits; split `i` draws from the stream
/// `(seed, "splits/i")`.
pub fn generate_splits(graph: &Graph, ratios: SplitRatios, count: usize, seed: u64) -> Result<SplitSet, GraphError> {
    let total = ratios.train + ratios.val + ratios.test;
    if (total - 1.0).abs() > 1e-9 || ratios.train < 0.0 || ratios.val < 0.0 || ratios.test < 0.0 {
        return Err(GraphError::InvalidParameter(format!(
            "split ratios must be non-negative and sum to 1, got {total}"
        )));
    }
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); graph.num_classes];
    for (v, &c) in graph.labels.iter().enumerate() {
        by_class[c].push(v);
    }
    for (class, members) in by_class.iter().enumerate() {
        if members.len() < 3 {
            return Err(GraphError::ClassTooSmall {
                class,
                size: members.len(),
                min: 3,
            });
        }
    }

    let splits = (0..count)
        .map(|i| {
            let mut rng = SeededRng::new(seed, format!("splits/{i}"));
            let mut split = Split {
                train: Vec::new(),
                val: Vec::new(),
                test: Vec::new(),
            };
            for members in &by_class {
                let mut nodes = members.clone();
                rng.shuffle(&mut nodes);
                let size = nodes.len() as f64;
                let n_train = (ratios.train * size).round() as usize;
                let n_val = ((ratios.val * size).round() as usize).min(nodes.len() - n_train);
                split.train.extend_from_slice(&nodes[..n_train]);
                split.val.extend_from_slice(&nodes[n_train..n_train + n_val]);
                split.test.extend_from_slice(&nodes[n_train + n_val..]);
            }
            split.train.sort_unstable();
            split.val.sort_unstable();
            split.test.sort_unstable();
            split
        })
        .collect();
    Ok(SplitSet { splits })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::{SparseMatrix, Tensor};

    fn graph(labels: Vec<usize>, classes: usize) -> Graph {
        let n = labels.len();
        Graph::new("g", Tensor::zeros(n, 1), SparseMatrix::empty(n, n), labels, classes).unwrap()
    }

    #[test]
    fn single_class_of_hundred() {
        let g = graph(vec![0; 100], 1);
        let s = generate_splits(&g, SplitRatios::default(), 1, 0).unwrap();
        let sp = &s.splits[0];
        assert_eq!((sp.train.len(), sp.val.len(), sp.test.len()), (48, 32, 20));
        sp.validate(100).unwrap();
    }

    #[test]
    fn ten_distinct_reproducible_splits() {
        let g = graph((0..60).map(|i| i % 3).collect(), 3);
        let a = generate_splits(&g, SplitRatios::default(), 10, 9).unwrap();
        let b = generate_splits(&g, SplitRatios::default(), 10, 9).unwrap();
        assert_eq!(a, b);
        for i in 0..10 {
            for j in (i + 1)..10 {
                assert_ne!(a.splits[i], a.splits[j]);
            }
        }
    }

    #[test]
    fn tiny_class_rejected() {
        let g = graph(vec![0, 0, 0, 1, 1], 2);
        assert!(matches!(
            generate_splits(&g, SplitRatios::default(), 1, 0),
            Err(GraphError::ClassTooSmall { class: 1, size: 2, .. })
        ));
    }
}
