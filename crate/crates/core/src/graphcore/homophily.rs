use super::{Graph, GraphError};
use crate::numkit::{SparseMatrix, Tensor};

/// Average over non-isolated nodes of the fraction of same-class neighbors
/// (self-loops ignored).
pub fn node_homophily(graph: &Graph) -> Result<f64, GraphError> {
    let mut total = 0.0;
    let mut counted = 0usize;
    for v in 0..graph.num_nodes() {
        let mut deg = 0usize;
        let mut same = 0usize;
        for (u, _) in graph.adjacency.row(v) {
            if u == v {
                continue;
            }
            deg += 1;
            if graph.labels[u] == graph.labels[v] {
                same += 1;
            }
        }
        if deg > 0 {
            total += same as f64 / deg as f64;
            counted += 1;
        }
    }
    if counted == 0 {
        return Err(GraphError::AllIsolated);
    }
    Ok(total / counted as f64)
}

/// `n x p` one-hot matrix; rows outside `mask` (when given) are zero.
pub fn one_hot(labels: &[usize], classes: usize, mask: Option<&[bool]>) -> Tensor {
    let mut y = Tensor::zeros(labels.len(), classes);
    for (v, &l) in labels.iter().enumerate() {
        if mask.is_none_or(|m| m[v]) {
            y.set(v, l, 1.0);
        }
    }
    y
}

/// Hard argmax predictions of `logits` as a masked one-hot matrix; ties go
/// to the lowest class index.
pub fn predictions_one_hot(logits: &Tensor, mask: &[bool]) -> Tensor {
    one_hot(&logits.argmax_rows(), logits.cols(), Some(mask))
}

/// Class-to-class connection probabilities over a node subset.
#[derive(Clone, Debug, PartialEq)]
pub struct HeterophilyMatrix {
    pub values: Tensor,
    pub node_mask: Vec<bool>,
}

/// `H = (YᵀAY) ⊘ (YᵀAE)` with `E` all ones; rows of `y` outside `mask` are
/// zeroed first and `0/0` entries are 0.
pub fn heterophily_matrix(y: &Tensor, adjacency: &SparseMatrix, mask: &[bool]) -> HeterophilyMatrix {
    let p = y.cols();
    let mut numer = Tensor::zeros(p, p);
    let mut denom = vec![0.0; p];
    let class_of = |v: usize| -> Option<usize> {
        if !mask[v] {
            return None;
        }
        y.row(v).iter().position(|&x| x != 0.0)
    };
    for v in 0..adjacency.rows() {
        let Some(cv) = class_of(v) else { continue };
        let yv = y.get(v, cv);
        for (u, w) in adjacency.row(v) {
            denom[cv] += yv * w;
            if let Some(cu) = class_of(u) {
                let cur = numer.get(cv, cu);
                numer.set(cv, cu, cur + yv * w * y.get(u, cu));
            }
        }
    }
    let mut values = Tensor::zeros(p, p);
    for i in 0..p {
        if denom[i] == 0.0 {
            continue;
        }
        for j in 0..p {
            values.set(i, j, numer.get(i, j) / denom[i]);
        }
    }
    HeterophilyMatrix {
        values,
        node_mask: mask.to_vec(),
    }
}

/// Squared Frobenius distance between predicted and true heterophily
/// matrices over the same node subset.
pub fn d_hete(predicted: &Tensor, truth: &Tensor, adjacency: &SparseMatrix, mask: &[bool]) -> f64 {
    let h_hat = heterophily_matrix(predicted, adjacency, mask);
    let h = heterophily_matrix(truth, adjacency, mask);
    h_hat
        .values
        .data()
        .iter()
        .zip(h.values.data())
        .map(|(a, b)| (a - b) * (a - b))
        .sum()
}
