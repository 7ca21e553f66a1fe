use serde::{Deserialize, Serialize};

use super::GraphError;
use crate::numkit::{SparseMatrix, Tensor};

/// Undirected node-classification graph.
///
/// `adjacency` is binary and symmetric; it may carry self-loops, which are
/// stripped when k-hop neighbor sets are built.
#[derive(Clone, Debug)]
pub struct Graph {
    pub name: String,
    pub features: Tensor,
    pub adjacency: SparseMatrix,
    pub labels: Vec<usize>,
    pub num_classes: usize,
}

impl Graph {
    pub fn new(
        name: impl Into<String>,
        features: Tensor,
        adjacency: SparseMatrix,
        labels: Vec<usize>,
        num_classes: usize,
    ) -> Result<Self, GraphError> {
        let n = features.rows();
        if adjacency.shape() != (n, n) {
            return Err(GraphError::LengthMismatch {
                what: "adjacency size",
                expected: n,
                found: adjacency.rows(),
            });
        }
        if labels.len() != n {
            return Err(GraphError::LengthMismatch {
                what: "label count",
                expected: n,
                found: labels.len(),
            });
        }
        if let Some(&label) = labels.iter().find(|&&l| l >= num_classes) {
            return Err(GraphError::LabelOutOfRange {
                label,
                classes: num_classes,
            });
        }
        if !adjacency.is_symmetric() {
            return Err(GraphError::InvalidParameter("adjacency must be symmetric".into()));
        }
        Ok(Graph {
            name: name.into(),
            features,
            adjacency,
            labels,
            num_classes,
        })
    }

    #[inline]
    pub fn num_nodes(&self) -> usize {
        self.features.rows()
    }

    #[inline]
    pub fn feature_dim(&self) -> usize {
        self.features.cols()
    }

    /// Undirected edges excluding self-loops.
    pub fn num_edges(&self) -> usize {
        self.adjacency.iter().filter(|&(r, c, _)| r < c).count()
    }

    pub fn class_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.num_classes];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }

    /// Scales each feature row to unit L1 norm (zero rows stay zero).
    pub fn row_normalize_features(&mut self) {
        for r in 0..self.features.rows() {
            let row = self.features.row_mut(r);
            let total: f64 = row.iter().map(|v| v.abs()).sum();
            if total > 0.0 {
                row.iter_mut().for_each(|v| *v /= total);
            }
        }
    }
}

/// One train/validation/test partition.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

impl Split {
    /// Checks index range and pairwise disjointness.
    pub fn validate(&self, n: usize) -> Result<(), GraphError> {
        let mut seen = vec![false; n];
        for &i in self.train.iter().chain(&self.val).chain(&self.test) {
            if i >= n {
                return Err(GraphError::IndexOutOfRange { index: i, n });
            }
            if seen[i] {
                return Err(GraphError::SplitOverlap(i));
            }
            seen[i] = true;
        }
        Ok(())
    }

    pub fn mask(ids: &[usize], n: usize) -> Vec<bool> {
        let mut m = vec![false; n];
        for &i in ids {
            m[i] = true;
        }
        m
    }

    pub fn train_mask(&self, n: usize) -> Vec<bool> {
        Self::mask(&self.train, n)
    }

    pub fn val_mask(&self, n: usize) -> Vec<bool> {
        Self::mask(&self.val, n)
    }

    pub fn test_mask(&self, n: usize) -> Vec<bool> {
        Self::mask(&self.test, n)
    }

    /// Union of train and validation nodes as a mask.
    pub fn labeled_mask(&self, n: usize) -> Vec<bool> {
        let mut m = self.train_mask(n);
        for &i in &self.val {
            m[i] = true;
        }
        m
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SplitSet {
    pub splits: Vec<Split>,
}

impl SplitSet {
    pub fn len(&self) -> usize {
        self.splits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.splits.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overlapping_split_rejected() {
        let s = Split {
            train: vec![0, 1],
            val: vec![1],
            test: vec![2],
        };
        let err = s.validate(3).unwrap_err();
        assert_eq!(err.to_string(), "split masks overlap at node 1");
    }

    #[test]
    fn graph_validation() {
        let a = SparseMatrix::from_undirected_edges(2, &[(0, 1)]).unwrap();
        assert!(Graph::new("g", Tensor::zeros(2, 1), a.clone(), vec![0, 2], 2).is_err());
        assert!(Graph::new("g", Tensor::zeros(3, 1), a.clone(), vec![0, 1, 0], 2).is_err());
        let g = Graph::new("g", Tensor::zeros(2, 1), a, vec![0, 1], 2).unwrap();
        assert_eq!(g.num_edges(), 1);
    }
}
