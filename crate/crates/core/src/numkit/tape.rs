//! Reverse-mode automatic differentiation over dense matrices.
//!
//! A [`Tape`] records every primitive applied during one forward pass. Node
//! indices grow monotonically and every primitive only consumes earlier
//! nodes, so walking the tape backwards visits each node after all of its
//! consumers. Learnable tensors live outside the tape as [`Param`]s; the
//! tape refers to them by [`ParamId`] and [`Gradients::accumulate`] adds the
//! adjoints into `Param::grad`.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::tensor::{matmul_at_acc, matmul_bt_acc, softmax_slice};
use super::{EdgeIndex, NumError, SeededRng, SparseMatrix, Tensor};

static NEXT_PARAM: AtomicU64 = AtomicU64::new(1);
static NEXT_TAPE: AtomicU64 = AtomicU64::new(1);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParamId(u64);

/// A learnable tensor with its gradient accumulator.
///
/// Serializes as its value only; a deserialized parameter gets a fresh id
/// and a zero gradient.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(from = "Tensor", into = "Tensor")]
pub struct Param {
    id: ParamId,
    pub value: Tensor,
    pub grad: Tensor,
}

impl Param {
    pub fn new(value: Tensor) -> Self {
        let grad = Tensor::zeros(value.rows(), value.cols());
        Param {
            id: ParamId(NEXT_PARAM.fetch_add(1, Ordering::Relaxed)),
            value,
            grad,
        }
    }

    #[inline]
    pub fn id(&self) -> ParamId {
        self.id
    }

    pub fn zero_grad(&mut self) {
        self.grad.fill(0.0);
    }

    pub fn numel(&self) -> usize {
        self.value.len()
    }
}

impl From<Tensor> for Param {
    fn from(value: Tensor) -> Self {
        Param::new(value)
    }
}

impl From<Param> for Tensor {
    fn from(p: Param) -> Tensor {
        p.value
    }
}

/// Handle to a node on a specific tape.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Var {
    tape: u64,
    idx: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Elu,
    Relu,
    #[serde(rename = "leakyrelu")]
    LeakyRelu,
}

impl Activation {
    pub fn name(self) -> &'static str {
        match self {
            Activation::Elu => "elu",
            Activation::Relu => "relu",
            Activation::LeakyRelu => "leakyrelu",
        }
    }
}

pub const LEAKY_SLOPE: f64 = 0.2;

enum Op {
    Leaf,
    Param(ParamId),
    MatMul(usize, usize),
    SpMM(Arc<SparseMatrix>, usize),
    Add(usize, usize),
    Sub(usize, usize),
    AddRow(usize, usize),
    Scale(usize, f64),
    ScaleBy(usize, usize),
    Hadamard(usize, usize),
    ConcatCols(Vec<usize>),
    SliceCols(usize, usize),
    SliceRows(usize, usize),
    Relu(usize),
    Elu(usize),
    LeakyRelu(usize),
    Tanh(usize),
    Sigmoid(usize),
    RsqrtEps(usize),
    Maximum(usize, usize),
    Dropout(usize, Tensor),
    SoftmaxRows(usize),
    LogSoftmax(usize),
    CrossEntropy {
        logits: usize,
        probs: Tensor,
        targets: Arc<Vec<usize>>,
        rows: Arc<Vec<usize>>,
    },
    Sum(usize),
    Gather(usize, Arc<Vec<usize>>),
    ScatterAdd(usize, Arc<EdgeIndex>),
    SegmentSoftmax(usize, Arc<EdgeIndex>),
    SegmentMax(usize, Vec<Option<usize>>),
    RowMul(usize, usize),
    RowDot(usize, usize),
    SelectCols(usize, Vec<usize>),
}

impl Op {
    fn name(&self) -> &'static str {
        match self {
            Op::Leaf => "leaf",
            Op::Param(_) => "param",
            Op::MatMul(..) => "matmul",
            Op::SpMM(..) => "sparse_dense_matmul",
            Op::Add(..) => "add",
            Op::Sub(..) => "sub",
            Op::AddRow(..) => "add_row",
            Op::Scale(..) => "scale",
            Op::ScaleBy(..) => "scale_by",
            Op::Hadamard(..) => "hadamard",
            Op::ConcatCols(..) => "concat_cols",
            Op::SliceCols(..) => "slice_cols",
            Op::SliceRows(..) => "slice_rows",
            Op::Relu(..) => "relu",
            Op::Elu(..) => "elu",
            Op::LeakyRelu(..) => "leakyrelu",
            Op::Tanh(..) => "tanh",
            Op::Sigmoid(..) => "sigmoid",
            Op::RsqrtEps(..) => "rsqrt_eps",
            Op::Maximum(..) => "maximum",
            Op::Dropout(..) => "dropout",
            Op::SoftmaxRows(..) => "softmax",
            Op::LogSoftmax(..) => "log_softmax",
            Op::CrossEntropy { .. } => "cross_entropy",
            Op::Sum(..) => "sum",
            Op::Gather(..) => "gather_rows",
            Op::ScatterAdd(..) => "scatter_add",
            Op::SegmentSoftmax(..) => "softmax_per_neighborhood",
            Op::SegmentMax(..) => "row_max",
            Op::RowMul(..) => "row_mul",
            Op::RowDot(..) => "row_dot",
            Op::SelectCols(..) => "select_cols",
        }
    }
}

struct Node {
    value: Arc<Tensor>,
    op: Op,
    requires_grad: bool,
}

/// Record of one forward pass.
pub struct Tape {
    id: u64,
    nodes: Vec<Node>,
    rng: SeededRng,
}

impl Tape {
    /// A fresh tape whose dropout masks come from the stream `(seed, "tape")`.
    pub fn new(seed: u64) -> Self {
        Self::with_rng(SeededRng::new(seed, "tape"))
    }

    pub fn with_rng(rng: SeededRng) -> Self {
        Tape {
            id: NEXT_TAPE.fetch_add(1, Ordering::Relaxed),
            nodes: Vec::new(),
            rng,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.idx].value
    }

    pub fn shape(&self, v: Var) -> (usize, usize) {
        self.nodes[v.idx].value.shape()
    }

    pub fn constant(&mut self, value: Tensor) -> Var {
        self.constant_shared(Arc::new(value))
    }

    pub fn constant_shared(&mut self, value: Arc<Tensor>) -> Var {
        self.push_raw(value, Op::Leaf, false)
    }

    pub fn param(&mut self, p: &Param) -> Var {
        self.push_raw(Arc::new(p.value.clone()), Op::Param(p.id), true)
    }

    fn push_raw(&mut self, value: Arc<Tensor>, op: Op, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        Var {
            tape: self.id,
            idx: self.nodes.len() - 1,
        }
    }

    fn push(&mut self, value: Tensor, op: Op, inputs: &[usize]) -> Result<Var, NumError> {
        if !value.is_finite() {
            return Err(NumError::NonFinite { op: op.name() });
        }
        let requires_grad = inputs.iter().any(|&i| self.nodes[i].requires_grad);
        Ok(self.push_raw(Arc::new(value), op, requires_grad))
    }

    fn check(&self, v: Var) -> Result<usize, NumError> {
        if v.tape != self.id || v.idx >= self.nodes.len() {
            return Err(NumError::Detached);
        }
        Ok(v.idx)
    }

    fn val(&self, i: usize) -> &Tensor {
        &self.nodes[i].value
    }

    fn same_shape(&self, op: &'static str, a: usize, b: usize) -> Result<(), NumError> {
        let (sa, sb) = (self.val(a).shape(), self.val(b).shape());
        if sa != sb {
            return Err(NumError::ShapeMismatch {
                op,
                left: sa,
                right: sb,
            });
        }
        Ok(())
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var, NumError> {
        let (a, b) = (self.check(a)?, self.check(b)?);
        let out = self.val(a).matmul(self.val(b))?;
        self.push(out, Op::MatMul(a, b), &[a, b])
    }

    pub fn spmm(&mut self, s: &Arc<SparseMatrix>, x: Var) -> Result<Var, NumError> {
        let x = self.check(x)?;
        let out = s.matmul_dense(self.val(x))?;
        self.push(out, Op::SpMM(Arc::clone(s), x), &[x])
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, NumError> {
        let (a, b) = (self.check(a)?, self.check(b)?);
        self.same_shape("add", a, b)?;
        let out = self.val(a).zip_map(self.val(b), |x, y| x + y);
        self.push(out, Op::Add(a, b), &[a, b])
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var, NumError> {
        let (a, b) = (self.check(a)?, self.check(b)?);
        self.same_shape("sub", a, b)?;
        let out = self.val(a).zip_map(self.val(b), |x, y| x - y);
        self.push(out, Op::Sub(a, b), &[a, b])
    }

    /// Adds a `1 x d` row to every row of `x`.
    pub fn add_row(&mut self, x: Var, bias: Var) -> Result<Var, NumError> {
        let (x, b) = (self.check(x)?, self.check(bias)?);
        let (xs, bs) = (self.val(x).shape(), self.val(b).shape());
        if bs != (1, xs.1) {
            return Err(NumError::ShapeMismatch {
                op: "add_row",
                left: xs,
                right: bs,
            });
        }
        let mut out = self.val(x).clone();
        let brow = self.val(b).data().to_vec();
        for r in 0..xs.0 {
            for (o, bv) in out.row_mut(r).iter_mut().zip(&brow) {
                *o += bv;
            }
        }
        self.push(out, Op::AddRow(x, b), &[x, b])
    }

    pub fn scale(&mut self, x: Var, c: f64) -> Result<Var, NumError> {
        let x = self.check(x)?;
        let out = self.val(x).map(|v| c * v);
        self.push(out, Op::Scale(x, c), &[x])
    }

    /// Multiplies every entry of `x` by the 1x1 tensor `s`.
    pub fn scale_by(&mut self, x: Var, s: Var) -> Result<Var, NumError> {
        let (x, s) = (self.check(x)?, self.check(s)?);
        if self.val(s).shape() != (1, 1) {
            return Err(NumError::ShapeMismatch {
                op: "scale_by",
                left: self.val(x).shape(),
                right: self.val(s).shape(),
            });
        }
        let c = self.val(s).item();
        let out = self.val(x).map(|v| c * v);
        self.push(out, Op::ScaleBy(x, s), &[x, s])
    }

    pub fn hadamard(&mut self, a: Var, b: Var) -> Result<Var, NumError> {
        let (a, b) = (self.check(a)?, self.check(b)?);
        self.same_shape("hadamard", a, b)?;
        let out = self.val(a).zip_map(self.val(b), |x, y| x * y);
        self.push(out, Op::Hadamard(a, b), &[a, b])
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var, NumError> {
        let idx: Vec<usize> = parts
            .iter()
            .map(|&p| self.check(p))
            .collect::<Result<_, _>>()?;
        let Some(&first) = idx.first() else {
            return Err(NumError::Empty("concat_cols"));
        };
        let rows = self.val(first).rows();
        let mut cols = 0;
        for &i in &idx {
            if self.val(i).rows() != rows {
                return Err(NumError::ShapeMismatch {
                    op: "concat_cols",
                    left: self.val(first).shape(),
                    right: self.val(i).shape(),
                });
            }
            cols += self.val(i).cols();
        }
        let mut out = Tensor::zeros(rows, cols);
        for r in 0..rows {
            let mut off = 0;
            for &i in &idx {
                let src = self.val(i).row(r);
                out.row_mut(r)[off..off + src.len()].copy_from_slice(src);
                off += src.len();
            }
        }
        let inputs = idx.clone();
        self.push(out, Op::ConcatCols(idx), &inputs)
    }

    /// Columns `start..end` of `x`.
    pub fn slice_cols(&mut self, x: Var, start: usize, end: usize) -> Result<Var, NumError> {
        let x = self.check(x)?;
        let (rows, cols) = self.val(x).shape();
        if start > end || end > cols {
            return Err(NumError::ShapeMismatch {
                op: "slice_cols",
                left: (rows, cols),
                right: (start, end),
            });
        }
        let mut out = Tensor::zeros(rows, end - start);
        for r in 0..rows {
            out.row_mut(r).copy_from_slice(&self.val(x).row(r)[start..end]);
        }
        self.push(out, Op::SliceCols(x, start), &[x])
    }

    /// Rows `start..end` of `x`.
    pub fn slice_rows(&mut self, x: Var, start: usize, end: usize) -> Result<Var, NumError> {
        let x = self.check(x)?;
        let (rows, cols) = self.val(x).shape();
        if start > end || end > rows {
            return Err(NumError::ShapeMismatch {
                op: "slice_rows",
                left: (rows, cols),
                right: (start, end),
            });
        }
        let data = self.val(x).data()[start * cols..end * cols].to_vec();
        let out = Tensor::from_vec(end - start, cols, data)?;
        self.push(out, Op::SliceRows(x, start), &[x])
    }

    pub fn relu(&mut self, x: Var) -> Result<Var, NumError> {
        let x = self.check(x)?;
        let out = self.val(x).map(|v| v.max(0.0));
        self.push(out, Op::Relu(x), &[x])
    }

    pub fn elu(&mut self, x: Var) -> Result<Var, NumError> {
        let x = self.check(x)?;
        let out = self.val(x).map(|v| if v > 0.0 { v } else { v.exp_m1() });
        self.push(out, Op::Elu(x), &[x])
    }

    /// Leaky ReLU with slope 0.2.
    pub fn leaky_relu(&mut self, x: Var) -> Result<Var, NumError> {
        let x = self.check(x)?;
        let out = self
            .val(x)
            .map(|v| if v > 0.0 { v } else { LEAKY_SLOPE * v });
        self.push(out, Op::LeakyRelu(x), &[x])
    }

    pub fn tanh(&mut self, x: Var) -> Result<Var, NumError> {
        let x = self.check(x)?;
        let out = self.val(x).map(f64::tanh);
        self.push(out, Op::Tanh(x), &[x])
    }

    pub fn sigmoid(&mut self, x: Var) -> Result<Var, NumError> {
        let x = self.check(x)?;
        let out = self.val(x).map(sigmoid);
        self.push(out, Op::Sigmoid(x), &[x])
    }

    pub fn activate(&mut self, x: Var, act: Activation) -> Result<Var, NumError> {
        match act {
            Activation::Elu => self.elu(x),
            Activation::Relu => self.relu(x),
            Activation::LeakyRelu => self.leaky_relu(x),
        }
    }

    /// Elementwise `1 / sqrt(x + eps)`.
    pub fn rsqrt_eps(&mut self, x: Var, eps: f64) -> Result<Var, NumError> {
        let x = self.check(x)?;
        let out = self.val(x).map(|v| 1.0 / (v + eps).sqrt());
        self.push(out, Op::RsqrtEps(x), &[x])
    }

    /// Elementwise maximum; ties route the gradient to `a`.
    pub fn maximum(&mut self, a: Var, b: Var) -> Result<Var, NumError> {
        let (a, b) = (self.check(a)?, self.check(b)?);
        self.same_shape("maximum", a, b)?;
        let out = self.val(a).zip_map(self.val(b), f64::max);
        self.push(out, Op::Maximum(a, b), &[a, b])
    }

    /// Inverted dropout: survivors are scaled by `1 / (1 - p)` at train time;
    /// evaluation (or `p == 0`) returns `x` itself.
    pub fn dropout(&mut self, x: Var, p: f64, train: bool) -> Result<Var, NumError> {
        let xi = self.check(x)?;
        if !train || p <= 0.0 {
            return Ok(x);
        }
        if p >= 1.0 {
            return Err(NumError::InvalidArgument(format!(
                "dropout rate {p} must be < 1"
            )));
        }
        let (rows, cols) = self.val(xi).shape();
        let keep = 1.0 / (1.0 - p);
        let mut mask = Tensor::zeros(rows, cols);
        for m in mask.data_mut() {
            if self.rng.uniform() >= p {
                *m = keep;
            }
        }
        let out = self.val(xi).zip_map(&mask, |v, m| v * m);
        self.push(out, Op::Dropout(xi, mask), &[xi])
    }

    pub fn softmax_rows(&mut self, x: Var) -> Result<Var, NumError> {
        let x = self.check(x)?;
        let src = self.val(x);
        let mut out = Tensor::zeros(src.rows(), src.cols());
        for r in 0..src.rows() {
            out.row_mut(r).copy_from_slice(&softmax_slice(src.row(r)));
        }
        self.push(out, Op::SoftmaxRows(x), &[x])
    }

    pub fn log_softmax(&mut self, x: Var) -> Result<Var, NumError> {
        let x = self.check(x)?;
        let src = self.val(x);
        let mut out = Tensor::zeros(src.rows(), src.cols());
        for r in 0..src.rows() {
            let row = src.row(r);
            let lse = log_sum_exp(row);
            for (o, &v) in out.row_mut(r).iter_mut().zip(row) {
                *o = v - lse;
            }
        }
        self.push(out, Op::LogSoftmax(x), &[x])
    }

    /// Mean cross-entropy of row-wise softmax(logits) against integer
    /// targets, over the listed rows only.
    pub fn cross_entropy(
        &mut self,
        logits: Var,
        targets: &Arc<Vec<usize>>,
        rows: &Arc<Vec<usize>>,
    ) -> Result<Var, NumError> {
        let li = self.check(logits)?;
        if rows.is_empty() {
            return Err(NumError::Empty("cross_entropy mask"));
        }
        let src = self.val(li);
        if targets.len() != src.rows() {
            return Err(NumError::ShapeMismatch {
                op: "cross_entropy",
                left: src.shape(),
                right: (targets.len(), 1),
            });
        }
        let mut probs = Tensor::zeros(src.rows(), src.cols());
        let mut loss = 0.0;
        for &r in rows.iter() {
            let t = targets[r];
            if t >= src.cols() {
                return Err(NumError::IndexOutOfRange {
                    index: (r, t),
                    shape: src.shape(),
                });
            }
            let row = src.row(r);
            let lse = log_sum_exp(row);
            loss -= row[t] - lse;
            for (p, &v) in probs.row_mut(r).iter_mut().zip(row) {
                *p = (v - lse).exp();
            }
        }
        loss /= rows.len() as f64;
        self.push(
            Tensor::scalar(loss),
            Op::CrossEntropy {
                logits: li,
                probs,
                targets: Arc::clone(targets),
                rows: Arc::clone(rows),
            },
            &[li],
        )
    }

    pub fn sum(&mut self, x: Var) -> Result<Var, NumError> {
        let x = self.check(x)?;
        let out = Tensor::scalar(self.val(x).sum());
        self.push(out, Op::Sum(x), &[x])
    }

    /// `out[e] = x[index[e]]`.
    pub fn gather_rows(&mut self, x: Var, index: &Arc<Vec<usize>>) -> Result<Var, NumError> {
        let x = self.check(x)?;
        let src = self.val(x);
        let mut out = Tensor::zeros(index.len(), src.cols());
        for (e, &i) in index.iter().enumerate() {
            if i >= src.rows() {
                return Err(NumError::IndexOutOfRange {
                    index: (i, 0),
                    shape: src.shape(),
                });
            }
            out.row_mut(e).copy_from_slice(src.row(i));
        }
        self.push(out, Op::Gather(x, Arc::clone(index)), &[x])
    }

    /// Sums edge rows into their destination nodes (neighborhood sum).
    pub fn scatter_add(&mut self, x: Var, edges: &Arc<EdgeIndex>) -> Result<Var, NumError> {
        let x = self.check(x)?;
        let src = self.val(x);
        if src.rows() != edges.len() {
            return Err(NumError::ShapeMismatch {
                op: "scatter_add",
                left: src.shape(),
                right: (edges.len(), 1),
            });
        }
        let mut out = Tensor::zeros(edges.nodes, src.cols());
        for (e, &v) in edges.dst.iter().enumerate() {
            for (o, &s) in out.row_mut(v).iter_mut().zip(src.row(e)) {
                *o += s;
            }
        }
        self.push(out, Op::ScatterAdd(x, Arc::clone(edges)), &[x])
    }

    /// Softmax of an `E x 1` score column within each destination segment.
    /// Nodes with no incoming edges contribute nothing, so downstream
    /// aggregates for them are zero.
    pub fn segment_softmax(&mut self, scores: Var, edges: &Arc<EdgeIndex>) -> Result<Var, NumError> {
        let s = self.check(scores)?;
        let src = self.val(s);
        if src.shape() != (edges.len(), 1) {
            return Err(NumError::ShapeMismatch {
                op: "softmax_per_neighborhood",
                left: src.shape(),
                right: (edges.len(), 1),
            });
        }
        let mut out = Tensor::zeros(edges.len(), 1);
        for v in 0..edges.nodes {
            let seg = edges.segment(v);
            let w = softmax_slice(&src.data()[seg.clone()]);
            out.data_mut()[seg].copy_from_slice(&w);
        }
        self.push(out, Op::SegmentSoftmax(s, Arc::clone(edges)), &[s])
    }

    /// Elementwise maximum of edge rows per destination; empty segments
    /// yield zero rows.
    pub fn segment_max(&mut self, x: Var, edges: &Arc<EdgeIndex>) -> Result<Var, NumError> {
        let xi = self.check(x)?;
        let src = self.val(xi);
        if src.rows() != edges.len() {
            return Err(NumError::ShapeMismatch {
                op: "row_max",
                left: src.shape(),
                right: (edges.len(), 1),
            });
        }
        let d = src.cols();
        let mut out = Tensor::zeros(edges.nodes, d);
        let mut arg = vec![None; edges.nodes * d];
        for v in 0..edges.nodes {
            for e in edges.segment(v) {
                for c in 0..d {
                    let val = src.get(e, c);
                    let slot = &mut arg[v * d + c];
                    if slot.is_none() || val > out.get(v, c) {
                        *slot = Some(e);
                        out.set(v, c, val);
                    }
                }
            }
        }
        self.push(out, Op::SegmentMax(xi, arg), &[xi])
    }

    /// Scales row `i` of `x` (n x d) by `s[i]` (n x 1).
    pub fn row_mul(&mut self, x: Var, s: Var) -> Result<Var, NumError> {
        let (x, s) = (self.check(x)?, self.check(s)?);
        let (xs, ss) = (self.val(x).shape(), self.val(s).shape());
        if ss != (xs.0, 1) {
            return Err(NumError::ShapeMismatch {
                op: "row_mul",
                left: xs,
                right: ss,
            });
        }
        let mut out = self.val(x).clone();
        for r in 0..xs.0 {
            let f = self.val(s).data()[r];
            out.row_mut(r).iter_mut().for_each(|v| *v *= f);
        }
        self.push(out, Op::RowMul(x, s), &[x, s])
    }

    /// Row-wise inner products, `n x 1`.
    pub fn row_dot(&mut self, a: Var, b: Var) -> Result<Var, NumError> {
        let (a, b) = (self.check(a)?, self.check(b)?);
        self.same_shape("row_dot", a, b)?;
        let (rows, _) = self.val(a).shape();
        let data = (0..rows)
            .map(|r| {
                self.val(a)
                    .row(r)
                    .iter()
                    .zip(self.val(b).row(r))
                    .map(|(x, y)| x * y)
                    .sum()
            })
            .collect();
        let out = Tensor::from_vec(rows, 1, data)?;
        self.push(out, Op::RowDot(a, b), &[a, b])
    }

    /// Columns of `x` in the listed order (duplicates allowed).
    pub fn select_cols(&mut self, x: Var, cols: &[usize]) -> Result<Var, NumError> {
        let x = self.check(x)?;
        let src = self.val(x);
        if let Some(&bad) = cols.iter().find(|&&c| c >= src.cols()) {
            return Err(NumError::IndexOutOfRange {
                index: (0, bad),
                shape: src.shape(),
            });
        }
        let mut out = Tensor::zeros(src.rows(), cols.len());
        for r in 0..src.rows() {
            for (k, &c) in cols.iter().enumerate() {
                out.set(r, k, src.get(r, c));
            }
        }
        self.push(out, Op::SelectCols(x, cols.to_vec()), &[x])
    }

    /// Reverse sweep from a scalar loss.
    pub fn backward(&self, loss: Var) -> Result<Gradients, NumError> {
        let root = self.check(loss)?;
        if self.val(root).shape() != (1, 1) {
            return Err(NumError::NotScalar(self.val(root).shape()));
        }
        let mut grads: Vec<Option<Tensor>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[root] = Some(Tensor::scalar(1.0));
        let mut params = HashMap::new();

        for i in (0..=root).rev() {
            let Some(g) = grads[i].take() else { continue };
            let node = &self.nodes[i];
            if !node.requires_grad {
                continue;
            }
            self.propagate(i, &g, &mut grads);
            if let Op::Param(id) = node.op {
                params
                    .entry(id)
                    .and_modify(|acc: &mut Tensor| acc.add_assign(&g))
                    .or_insert_with(|| g.clone());
            }
            grads[i] = Some(g);
        }
        Ok(Gradients { params, nodes: grads })
    }

    fn propagate(&self, i: usize, g: &Tensor, grads: &mut [Option<Tensor>]) {
        let y = &*self.nodes[i].value;
        let nodes = &self.nodes;
        let mut acc = |j: usize, f: &dyn Fn(&mut Tensor)| {
            if !nodes[j].requires_grad {
                return;
            }
            let (r, c) = nodes[j].value.shape();
            let slot = grads[j].get_or_insert_with(|| Tensor::zeros(r, c));
            f(slot);
        };
        match &self.nodes[i].op {
            Op::Leaf | Op::Param(_) => {}
            Op::MatMul(a, b) => {
                let (av, bv) = (self.val(*a), self.val(*b));
                acc(*a, &|s| matmul_bt_acc(g, bv, s));
                acc(*b, &|s| matmul_at_acc(av, g, s));
            }
            Op::SpMM(m, x) => acc(*x, &|s| m.transpose_matmul_acc(g, s)),
            Op::Add(a, b) => {
                acc(*a, &|s| s.add_assign(g));
                acc(*b, &|s| s.add_assign(g));
            }
            Op::Sub(a, b) => {
                acc(*a, &|s| s.add_assign(g));
                acc(*b, &|s| s.add_scaled_assign(g, -1.0));
            }
            Op::AddRow(x, b) => {
                acc(*x, &|s| s.add_assign(g));
                acc(*b, &|s| {
                    for r in 0..g.rows() {
                        for (o, v) in s.data_mut().iter_mut().zip(g.row(r)) {
                            *o += v;
                        }
                    }
                });
            }
            Op::Scale(x, c) => acc(*x, &|s| s.add_scaled_assign(g, *c)),
            Op::ScaleBy(x, k) => {
                let c = self.val(*k).item();
                let xv = self.val(*x);
                acc(*x, &|s| s.add_scaled_assign(g, c));
                acc(*k, &|s| {
                    let dot: f64 = g.data().iter().zip(xv.data()).map(|(a, b)| a * b).sum();
                    s.data_mut()[0] += dot;
                });
            }
            Op::Hadamard(a, b) => {
                let (av, bv) = (self.val(*a), self.val(*b));
                acc(*a, &|s| add_product(s, g, bv));
                acc(*b, &|s| add_product(s, g, av));
            }
            Op::ConcatCols(parts) => {
                let mut off = 0;
                for &p in parts {
                    let w = self.val(p).cols();
                    acc(p, &|s| {
                        for r in 0..g.rows() {
                            for (o, v) in s.row_mut(r).iter_mut().zip(&g.row(r)[off..off + w]) {
                                *o += v;
                            }
                        }
                    });
                    off += w;
                }
            }
            Op::SliceCols(x, start) => acc(*x, &|s| {
                for r in 0..g.rows() {
                    for (o, v) in s.row_mut(r)[*start..].iter_mut().zip(g.row(r)) {
                        *o += v;
                    }
                }
            }),
            Op::SliceRows(x, start) => acc(*x, &|s| {
                let cols = g.cols();
                for (o, v) in s.data_mut()[start * cols..].iter_mut().zip(g.data()) {
                    *o += v;
                }
            }),
            Op::Relu(x) => {
                let xv = self.val(*x);
                acc(*x, &|s| add_masked(s, g, xv, |v| if v > 0.0 { 1.0 } else { 0.0 }));
            }
            Op::Elu(x) => {
                let xv = self.val(*x);
                acc(*x, &|s| add_masked(s, g, xv, |v| if v > 0.0 { 1.0 } else { v.exp() }));
            }
            Op::LeakyRelu(x) => {
                let xv = self.val(*x);
                acc(*x, &|s| {
                    add_masked(s, g, xv, |v| if v > 0.0 { 1.0 } else { LEAKY_SLOPE })
                });
            }
            Op::Tanh(x) => acc(*x, &|s| add_masked(s, g, y, |t| 1.0 - t * t)),
            Op::Sigmoid(x) => acc(*x, &|s| add_masked(s, g, y, |t| t * (1.0 - t))),
            Op::RsqrtEps(x) => acc(*x, &|s| add_masked(s, g, y, |t| -0.5 * t * t * t)),
            Op::Maximum(a, b) => {
                let (av, bv) = (self.val(*a), self.val(*b));
                acc(*a, &|s| {
                    for k in 0..s.len() {
                        if av.data()[k] >= bv.data()[k] {
                            s.data_mut()[k] += g.data()[k];
                        }
                    }
                });
                acc(*b, &|s| {
                    for k in 0..s.len() {
                        if av.data()[k] < bv.data()[k] {
                            s.data_mut()[k] += g.data()[k];
                        }
                    }
                });
            }
            Op::Dropout(x, mask) => acc(*x, &|s| add_product(s, g, mask)),
            Op::SoftmaxRows(x) => acc(*x, &|s| {
                for r in 0..g.rows() {
                    let (gr, yr) = (g.row(r), y.row(r));
                    let dot: f64 = gr.iter().zip(yr).map(|(a, b)| a * b).sum();
                    for ((o, gv), yv) in s.row_mut(r).iter_mut().zip(gr).zip(yr) {
                        *o += yv * (gv - dot);
                    }
                }
            }),
            Op::LogSoftmax(x) => acc(*x, &|s| {
                for r in 0..g.rows() {
                    let (gr, yr) = (g.row(r), y.row(r));
                    let total: f64 = gr.iter().sum();
                    for ((o, gv), yv) in s.row_mut(r).iter_mut().zip(gr).zip(yr) {
                        *o += gv - yv.exp() * total;
                    }
                }
            }),
            Op::CrossEntropy {
                logits,
                probs,
                targets,
                rows,
            } => {
                let scale = g.item() / rows.len() as f64;
                acc(*logits, &|s| {
                    for &r in rows.iter() {
                        let t = targets[r];
                        for (c, (o, p)) in s.row_mut(r).iter_mut().zip(probs.row(r)).enumerate() {
                            let onehot = if c == t { 1.0 } else { 0.0 };
                            *o += scale * (p - onehot);
                        }
                    }
                });
            }
            Op::Sum(x) => {
                let c = g.item();
                acc(*x, &|s| s.data_mut().iter_mut().for_each(|v| *v += c));
            }
            Op::Gather(x, index) => acc(*x, &|s| {
                for (e, &src) in index.iter().enumerate() {
                    for (o, v) in s.row_mut(src).iter_mut().zip(g.row(e)) {
                        *o += v;
                    }
                }
            }),
            Op::ScatterAdd(x, edges) => acc(*x, &|s| {
                for (e, &v) in edges.dst.iter().enumerate() {
                    for (o, gv) in s.row_mut(e).iter_mut().zip(g.row(v)) {
                        *o += gv;
                    }
                }
            }),
            Op::SegmentSoftmax(x, edges) => acc(*x, &|s| {
                for v in 0..edges.nodes {
                    let seg = edges.segment(v);
                    let dot: f64 = seg.clone().map(|e| g.data()[e] * y.data()[e]).sum();
                    for e in seg {
                        s.data_mut()[e] += y.data()[e] * (g.data()[e] - dot);
                    }
                }
            }),
            Op::SegmentMax(x, arg) => {
                let d = g.cols();
                acc(*x, &|s| {
                    for (k, a) in arg.iter().enumerate() {
                        if let Some(e) = a {
                            let c = k % d;
                            let v = k / d;
                            s.data_mut()[e * d + c] += g.get(v, c);
                        }
                    }
                });
            }
            Op::RowMul(x, f) => {
                let (xv, fv) = (self.val(*x), self.val(*f));
                acc(*x, &|s| {
                    for r in 0..g.rows() {
                        let k = fv.data()[r];
                        for (o, gv) in s.row_mut(r).iter_mut().zip(g.row(r)) {
                            *o += k * gv;
                        }
                    }
                });
                acc(*f, &|s| {
                    for r in 0..g.rows() {
                        let dot: f64 = g.row(r).iter().zip(xv.row(r)).map(|(a, b)| a * b).sum();
                        s.data_mut()[r] += dot;
                    }
                });
            }
            Op::RowDot(a, b) => {
                let (av, bv) = (self.val(*a), self.val(*b));
                let back = |s: &mut Tensor, other: &Tensor| {
                    for r in 0..g.rows() {
                        let k = g.data()[r];
                        for (o, v) in s.row_mut(r).iter_mut().zip(other.row(r)) {
                            *o += k * v;
                        }
                    }
                };
                acc(*a, &|s| back(s, bv));
                acc(*b, &|s| back(s, av));
            }
            Op::SelectCols(x, cols) => acc(*x, &|s| {
                for r in 0..g.rows() {
                    for (k, &c) in cols.iter().enumerate() {
                        let cur = s.get(r, c);
                        s.set(r, c, cur + g.get(r, k));
                    }
                }
            }),
        }
    }
}

fn add_product(s: &mut Tensor, g: &Tensor, other: &Tensor) {
    for ((o, a), b) in s.data_mut().iter_mut().zip(g.data()).zip(other.data()) {
        *o += a * b;
    }
}

fn add_masked(s: &mut Tensor, g: &Tensor, basis: &Tensor, f: impl Fn(f64) -> f64) {
    for ((o, a), b) in s.data_mut().iter_mut().zip(g.data()).zip(basis.data()) {
        *o += a * f(*b);
    }
}

pub fn sigmoid(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

fn log_sum_exp(row: &[f64]) -> f64 {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Adjoints produced by one backward sweep.
pub struct Gradients {
    params: HashMap<ParamId, Tensor>,
    nodes: Vec<Option<Tensor>>,
}

impl Gradients {
    pub fn param(&self, id: ParamId) -> Option<&Tensor> {
        self.params.get(&id)
    }

    /// Adjoint of any tape node (`None` if it does not reach the loss).
    pub fn of(&self, v: Var) -> Option<&Tensor> {
        self.nodes.get(v.idx).and_then(Option::as_ref)
    }

    /// Adds this sweep's adjoints into each parameter's `grad`.
    pub fn accumulate<'a>(&self, params: impl IntoIterator<Item = &'a mut Param>) {
        for p in params {
            if let Some(g) = self.params.get(&p.id) {
                p.grad.add_assign(g);
            }
        }
    }
}
