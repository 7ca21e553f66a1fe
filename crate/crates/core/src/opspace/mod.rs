//! Candidate operations: 18 neighborhood aggregators and the layer-combination
//! (gate and fuser) operations, each a differentiable layer over a tape.

mod agg;
mod combine;
mod hop;

pub use agg::{agg_forward, init_agg_params, AggOpKind, OpContext, OpHyper, OpTag};
pub use combine::{apply_gate, fuser_forward, init_fuser_params, FuserKind, GateKind, MacroOpKind};
pub use hop::HopGraph;

use thiserror::Error;

use crate::numkit::{NumError, Param, SeededRng, Tape, Tensor, Var};

#[derive(Debug, Error)]
pub enum OpError {
    #[error("unknown operation {0:?}")]
    UnknownOp(String),
    #[error("{kind} expects {expected} parameter tensors, got {found}")]
    ParamCount {
        kind: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("{kind} produced a non-finite output")]
    NonFinite { kind: &'static str },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error(transparent)]
    Num(#[from] NumError),
}

/// Learnable tensors of one candidate, in the positional order its forward
/// pass expects.
#[derive(Clone, Debug, serde::Serialize, serde::Deserialize)]
pub struct OpParams {
    pub params: Vec<Param>,
}

impl OpParams {
    pub fn register(&self, tape: &mut Tape) -> Vec<Var> {
        self.params.iter().map(|p| tape.param(p)).collect()
    }

    pub fn numel(&self) -> usize {
        self.params.iter().map(Param::numel).sum()
    }
}

/// Glorot-uniform matrix, `U(-a, a)` with `a = sqrt(6 / (rows + cols))`.
pub fn glorot(rows: usize, cols: usize, rng: &mut SeededRng) -> Tensor {
    let a = (6.0 / (rows + cols) as f64).sqrt();
    let data = (0..rows * cols).map(|_| rng.uniform_range(-a, a)).collect();
    Tensor::from_vec(rows, cols, data).expect("shape matches by construction")
}

pub(crate) fn expect_params(kind: &'static str, w: &[Var], expected: usize) -> Result<(), OpError> {
    if w.len() != expected {
        return Err(OpError::ParamCount {
            kind,
            expected,
            found: w.len(),
        });
    }
    Ok(())
}
