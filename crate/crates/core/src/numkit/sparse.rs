use serde::{Deserialize, Serialize};

use super::{NumError, Tensor};

/// Compressed-row sparse matrix.
///
/// Column indices within a row are strictly increasing, so no `(row, col)`
/// pair appears twice.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    pub fn empty(rows: usize, cols: usize) -> Self {
        SparseMatrix {
            rows,
            cols,
            row_ptr: vec![0; rows + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Builds from `(row, col, value)` triplets. Duplicate coordinates and
    /// out-of-range indices are rejected.
    pub fn from_triplets(
        rows: usize,
        cols: usize,
        mut triplets: Vec<(usize, usize, f64)>,
    ) -> Result<Self, NumError> {
        for &(r, c, _) in &triplets {
            if r >= rows || c >= cols {
                return Err(NumError::IndexOutOfRange {
                    index: (r, c),
                    shape: (rows, cols),
                });
            }
        }
        triplets.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        for w in triplets.windows(2) {
            if w[0].0 == w[1].0 && w[0].1 == w[1].1 {
                return Err(NumError::DuplicateEntry(w[0].0, w[0].1));
            }
        }
        let mut row_ptr = vec![0; rows + 1];
        for &(r, _, _) in &triplets {
            row_ptr[r + 1] += 1;
        }
        for r in 0..rows {
            row_ptr[r + 1] += row_ptr[r];
        }
        Ok(SparseMatrix {
            rows,
            cols,
            row_ptr,
            col_idx: triplets.iter().map(|t| t.1).collect(),
            values: triplets.iter().map(|t| t.2).collect(),
        })
    }

    /// Binary symmetric adjacency from an undirected edge list. Repeated
    /// pairs (in either orientation) collapse to one edge; self-loops are kept.
    pub fn from_undirected_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self, NumError> {
        let mut pairs: Vec<(usize, usize)> = Vec::with_capacity(edges.len() * 2);
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(NumError::IndexOutOfRange {
                    index: (u, v),
                    shape: (n, n),
                });
            }
            pairs.push((u, v));
            pairs.push((v, u));
        }
        pairs.sort_unstable();
        pairs.dedup();
        Self::from_triplets(n, n, pairs.into_iter().map(|(u, v)| (u, v, 1.0)).collect())
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    #[inline]
    pub fn col_indices(&self) -> &[usize] {
        &self.col_idx
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `(col, value)` entries of one row.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.col_idx[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    /// Number of stored entries in a row.
    #[inline]
    pub fn row_nnz(&self, r: usize) -> usize {
        self.row_ptr[r + 1] - self.row_ptr[r]
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.rows).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        match self.col_idx[span.clone()].binary_search(&c) {
            Ok(pos) => self.values[span.start + pos],
            Err(_) => 0.0,
        }
    }

    pub fn is_symmetric(&self) -> bool {
        self.rows == self.cols && self.iter().all(|(r, c, v)| self.get(c, r) == v)
    }

    pub fn has_self_loops(&self) -> bool {
        (0..self.rows.min(self.cols)).any(|i| self.get(i, i) != 0.0)
    }

    pub fn without_diagonal(&self) -> SparseMatrix {
        self.filter(|r, c, _| r != c)
    }

    pub fn filter(&self, keep: impl Fn(usize, usize, f64) -> bool) -> SparseMatrix {
        let mut row_ptr = vec![0; self.rows + 1];
        let mut col_idx = Vec::with_capacity(self.nnz());
        let mut values = Vec::with_capacity(self.nnz());
        for r in 0..self.rows {
            for (c, v) in self.row(r) {
                if keep(r, c, v) {
                    col_idx.push(c);
                    values.push(v);
                }
            }
            row_ptr[r + 1] = col_idx.len();
        }
        SparseMatrix {
            rows: self.rows,
            cols: self.cols,
            row_ptr,
            col_idx,
            values,
        }
    }

    /// Same sparsity pattern with each value replaced by `f(row, col, value)`.
    pub fn map_values(&self, f: impl Fn(usize, usize, f64) -> f64) -> SparseMatrix {
        let mut out = self.clone();
        for r in 0..self.rows {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                out.values[k] = f(r, self.col_idx[k], self.values[k]);
            }
        }
        out
    }

    /// Sum of stored values per row.
    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.rows).map(|r| self.row(r).map(|(_, v)| v).sum()).collect()
    }

    /// Number of unordered pairs in a symmetric pattern, self-loops counted once.
    pub fn undirected_edge_count(&self) -> usize {
        self.iter().filter(|&(r, c, _)| r <= c).count()
    }

    pub fn matmul_dense(&self, x: &Tensor) -> Result<Tensor, NumError> {
        if self.cols != x.rows() {
            return Err(NumError::ShapeMismatch {
                op: "sparse_dense_matmul",
                left: self.shape(),
                right: x.shape(),
            });
        }
        let d = x.cols();
        let mut out = Tensor::zeros(self.rows, d);
        for r in 0..self.rows {
            let orow = out.row_mut(r);
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let w = self.values[k];
                let xrow = x.row(self.col_idx[k]);
                for (o, &xv) in orow.iter_mut().zip(xrow) {
                    *o += w * xv;
                }
            }
        }
        Ok(out)
    }

    /// `out += self^T * g`, the adjoint of [`SparseMatrix::matmul_dense`].
    pub(crate) fn transpose_matmul_acc(&self, g: &Tensor, out: &mut Tensor) {
        for r in 0..self.rows {
            let grow = g.row(r);
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let w = self.values[k];
                let orow = out.row_mut(self.col_idx[k]);
                for (o, &gv) in orow.iter_mut().zip(grow) {
                    *o += w * gv;
                }
            }
        }
    }

    pub fn to_dense(&self) -> Tensor {
        let mut t = Tensor::zeros(self.rows, self.cols);
        for (r, c, v) in self.iter() {
            t.set(r, c, v);
        }
        t
    }

    /// Edge list in destination-major order (row = destination).
    pub fn edge_index(&self) -> EdgeIndex {
        let mut dst = Vec::with_capacity(self.nnz());
        for r in 0..self.rows {
            dst.extend(std::iter::repeat_n(r, self.row_nnz(r)));
        }
        EdgeIndex {
            nodes: self.rows,
            src: self.col_idx.clone(),
            dst,
            offsets: self.row_ptr.clone(),
        }
    }
}

/// Edges grouped by destination node: the edges into node `v` are
/// `offsets[v]..offsets[v + 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeIndex {
    pub nodes: usize,
    pub src: Vec<usize>,
    pub dst: Vec<usize>,
    pub offsets: Vec<usize>,
}

impl EdgeIndex {
    #[inline]
    pub fn len(&self) -> usize {
        self.src.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.src.is_empty()
    }

    #[inline]
    pub fn segment(&self, v: usize) -> std::ops::Range<usize> {
        self.offsets[v]..self.offsets[v + 1]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicate_and_range_checks() {
        assert!(matches!(
            SparseMatrix::from_triplets(2, 2, vec![(0, 1, 1.0), (0, 1, 2.0)]),
            Err(NumError::DuplicateEntry(0, 1))
        ));
        assert!(SparseMatrix::from_triplets(2, 2, vec![(2, 0, 1.0)]).is_err());
    }

    #[test]
    fn undirected_edges_symmetrize_and_dedup() {
        let a = SparseMatrix::from_undirected_edges(3, &[(0, 1), (1, 0), (1, 2)]).unwrap();
        assert!(a.is_symmetric());
        assert_eq!(a.nnz(), 4);
        assert_eq!(a.undirected_edge_count(), 2);
    }

    #[test]
    fn empty_spmm_is_zero() {
        let x = Tensor::from_rows(&[[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]]).unwrap();
        let y = SparseMatrix::empty(3, 3).matmul_dense(&x).unwrap();
        assert_eq!(y, Tensor::zeros(3, 2));
    }

    #[test]
    fn spmm_matches_dense_and_adjoint() {
        let s = SparseMatrix::from_triplets(3, 3, vec![(0, 1, 2.0), (2, 0, -1.0), (1, 1, 0.5)])
            .unwrap();
        let x = Tensor::from_rows(&[[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]]).unwrap();
        assert_eq!(s.matmul_dense(&x).unwrap(), s.to_dense().matmul(&x).unwrap());
        let mut adj = Tensor::zeros(3, 2);
        s.transpose_matmul_acc(&x, &mut adj);
        assert_eq!(adj, s.to_dense().transpose().matmul(&x).unwrap());
    }

    #[test]
    fn edge_index_groups_by_destination() {
        let a = SparseMatrix::from_undirected_edges(3, &[(0, 1), (0, 2)]).unwrap();
        let e = a.edge_index();
        assert_eq!(e.segment(0), 0..2);
        assert_eq!(&e.src[0..2], &[1, 2]);
        assert_eq!(e.dst, vec![0, 0, 1, 2]);
    }
}
