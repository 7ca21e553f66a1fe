use serde::{Deserialize, Serialize};

use super::{Graph, GraphError};
use crate::numkit::{SeededRng, SparseMatrix, Tensor};

/// Per-class Gaussian feature means with a shared standard deviation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub means: Vec<Vec<f64>>,
    pub sigma: f64,
}

impl FeatureSpec {
    /// Class means drawn i.i.d. `N(0, scale^2)` per coordinate.
    pub fn random_means(classes: usize, dim: usize, scale: f64, sigma: f64, rng: &mut SeededRng) -> Self {
        let means = (0..classes)
            .map(|_| (0..dim).map(|_| scale * rng.normal()).collect())
            .collect();
        FeatureSpec { means, sigma }
    }

    pub fn dim(&self) -> usize {
        self.means.first().map_or(0, Vec::len)
    }
}

/// Stochastic block model: every unordered pair `(u, v)` is an edge with
/// probability `mixing[y_u][y_v]`; node features are drawn from the class
/// Gaussian. Nodes are labeled in contiguous class blocks.
pub fn sbm_generate(
    class_sizes: &[usize],
    mixing: &Tensor,
    features: &FeatureSpec,
    seed: u64,
) -> Result<Graph, GraphError> {
    let p = class_sizes.len();
    if mixing.shape() != (p, p) {
        return Err(GraphError::InvalidParameter(format!(
            "mixing matrix must be {p}x{p}, got {:?}",
            mixing.shape()
        )));
    }
    for i in 0..p {
        for j in 0..p {
            let b = mixing.get(i, j);
            if !(0.0..=1.0).contains(&b) || b.is_nan() {
                return Err(GraphError::InvalidParameter(format!(
                    "edge probability {b} at ({i},{j}) outside [0, 1]"
                )));
            }
            if b != mixing.get(j, i) {
                return Err(GraphError::InvalidParameter("mixing matrix must be symmetric".into()));
            }
        }
    }
    if features.means.len() != p || features.means.iter().any(|m| m.len() != features.dim()) {
        return Err(GraphError::InvalidParameter(
            "feature means must be one equal-length vector per class".into(),
        ));
    }
    if !(features.sigma >= 0.0) {
        return Err(GraphError::InvalidParameter("sigma must be >= 0".into()));
    }

    let labels: Vec<usize> = class_sizes
        .iter()
        .enumerate()
        .flat_map(|(c, &s)| std::iter::repeat_n(c, s))
        .collect();
    let n = labels.len();

    let mut edge_rng = SeededRng::new(seed, "sbm/edges");
    let mut edges = Vec::new();
    for u in 0..n {
        for v in (u + 1)..n {
            if edge_rng.uniform() < mixing.get(labels[u], labels[v]) {
                edges.push((u, v));
            }
        }
    }

    let mut feat_rng = SeededRng::new(seed, "sbm/features");
    let d0 = features.dim();
    let mut x = Tensor::zeros(n, d0);
    for (v, &c) in labels.iter().enumerate() {
        for (k, m) in features.means[c].iter().enumerate() {
            x.set(v, k, m + features.sigma * feat_rng.normal());
        }
    }

    let adjacency = SparseMatrix::from_undirected_edges(n, &edges)?;
    Graph::new(format!("sbm-{seed}"), x, adjacency, labels, p)
}

/// Expected node homophily for equal class sizes with constant intra- and
/// inter-class edge probabilities (ratio of expected same-class degree to
/// expected degree).
pub fn expected_sbm_homophily(class_size: usize, classes: usize, p_intra: f64, p_inter: f64) -> f64 {
    let n = class_size * classes;
    let same = p_intra * (class_size as f64 - 1.0);
    let other = p_inter * (n - class_size) as f64;
    same / (same + other)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphcore::node_homophily;

    fn mixing(p: usize, intra: f64, inter: f64) -> Tensor {
        let mut b = Tensor::filled(p, p, inter);
        for i in 0..p {
            b.set(i, i, intra);
        }
        b
    }

    fn spec(p: usize) -> FeatureSpec {
        FeatureSpec::random_means(p, 4, 1.0, 0.5, &mut SeededRng::new(0, "means"))
    }

    #[test]
    fn diagonal_mixing_is_fully_homophilous() {
        let g = sbm_generate(&[30, 30], &mixing(2, 0.2, 0.0), &spec(2), 1).unwrap();
        assert_eq!(node_homophily(&g).unwrap(), 1.0);
    }

    #[test]
    fn off_diagonal_mixing_is_fully_heterophilous() {
        let g = sbm_generate(&[30, 30, 30], &mixing(3, 0.0, 0.1), &spec(3), 1).unwrap();
        assert_eq!(node_homophily(&g).unwrap(), 0.0);
    }

    #[test]
    fn empirical_homophily_near_expectation() {
        let expected = expected_sbm_homophily(100, 3, 0.01, 0.05);
        let g = sbm_generate(&[100; 3], &mixing(3, 0.01, 0.05), &spec(3), 42).unwrap();
        let got = node_homophily(&g).unwrap();
        assert!((got - expected).abs() < 0.05, "got {got}, expected {expected}");
    }

    #[test]
    fn deterministic_and_validated() {
        let a = sbm_generate(&[10, 10], &mixing(2, 0.3, 0.1), &spec(2), 5).unwrap();
        let b = sbm_generate(&[10, 10], &mixing(2, 0.3, 0.1), &spec(2), 5).unwrap();
        assert_eq!(a.adjacency, b.adjacency);
        assert_eq!(a.features, b.features);
        assert!(sbm_generate(&[10, 10], &mixing(2, 1.5, 0.1), &spec(2), 5).is_err());
        let mut asym = mixing(2, 0.3, 0.1);
        asym.set(0, 1, 0.2);
        assert!(sbm_generate(&[10, 10], &asym, &spec(2), 5).is_err());
    }
}
