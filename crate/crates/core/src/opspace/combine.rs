use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{expect_params, glorot, OpError, OpParams};
use crate::numkit::{Param, SeededRng, Tape, Tensor, Var};

/// Per-layer choice of whether a layer's output reaches the fuser.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GateKind {
    #[serde(rename = "l_skip")]
    Skip,
    #[serde(rename = "l_zero")]
    Zero,
}

/// How the per-layer outputs are combined into one node representation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FuserKind {
    #[serde(rename = "l_concat")]
    Concat,
    #[serde(rename = "l_max")]
    Max,
    #[serde(rename = "l_lstm")]
    Lstm,
}

/// The five layer-combination operations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MacroOpKind {
    Gate(GateKind),
    Fuser(FuserKind),
}

impl MacroOpKind {
    pub const ALL: [MacroOpKind; 5] = [
        MacroOpKind::Gate(GateKind::Skip),
        MacroOpKind::Gate(GateKind::Zero),
        MacroOpKind::Fuser(FuserKind::Concat),
        MacroOpKind::Fuser(FuserKind::Max),
        MacroOpKind::Fuser(FuserKind::Lstm),
    ];

    pub fn name(self) -> &'static str {
        match self {
            MacroOpKind::Gate(g) => g.name(),
            MacroOpKind::Fuser(f) => f.name(),
        }
    }
}

impl GateKind {
    pub const ALL: [GateKind; 2] = [GateKind::Skip, GateKind::Zero];

    pub fn name(self) -> &'static str {
        match self {
            GateKind::Skip => "l_skip",
            GateKind::Zero => "l_zero",
        }
    }

    pub fn catalog_index(self) -> usize {
        self as usize
    }
}

impl FuserKind {
    pub const ALL: [FuserKind; 3] = [FuserKind::Concat, FuserKind::Max, FuserKind::Lstm];

    pub fn name(self) -> &'static str {
        match self {
            FuserKind::Concat => "l_concat",
            FuserKind::Max => "l_max",
            FuserKind::Lstm => "l_lstm",
        }
    }

    pub fn catalog_index(self) -> usize {
        self as usize
    }

    /// Shapes of the learnable tensors for `layers` slots of width `d`.
    pub fn param_shapes(self, layers: usize, d: usize) -> Vec<(usize, usize)> {
        match self {
            FuserKind::Concat => vec![(layers * d, d)],
            FuserKind::Max => vec![],
            FuserKind::Lstm => vec![(d, 4 * d), (d, 4 * d), (1, 4 * d), (d, 1), (d, d)],
        }
    }

    pub fn param_count(self, layers: usize, d: usize) -> usize {
        self.param_shapes(layers, d).iter().map(|(r, c)| r * c).sum()
    }
}

macro_rules! named {
    ($t:ty) => {
        impl fmt::Display for $t {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.name())
            }
        }

        impl FromStr for $t {
            type Err = OpError;

            fn from_str(s: &str) -> Result<Self, OpError> {
                <$t>::ALL
                    .iter()
                    .copied()
                    .find(|k| k.name() == s)
                    .ok_or_else(|| OpError::UnknownOp(s.to_string()))
            }
        }
    };
}

named!(GateKind);
named!(FuserKind);
named!(MacroOpKind);

/// Glorot matrices; the recurrent bias starts at zero.
pub fn init_fuser_params(kind: FuserKind, layers: usize, d: usize, rng: &mut SeededRng) -> OpParams {
    let params = kind
        .param_shapes(layers, d)
        .into_iter()
        .enumerate()
        .map(|(i, (r, c))| {
            if kind == FuserKind::Lstm && i == 2 {
                Tensor::zeros(r, c)
            } else {
                glorot(r, c, rng)
            }
        })
        .map(Param::new)
        .collect();
    OpParams { params }
}

/// `l_skip` passes the layer output through; `l_zero` replaces it with zeros.
pub fn apply_gate(tape: &mut Tape, kind: GateKind, h: Var) -> Var {
    match kind {
        GateKind::Skip => h,
        GateKind::Zero => {
            let (r, c) = tape.shape(h);
            tape.constant(Tensor::zeros(r, c))
        }
    }
}

/// Combines `L` equally shaped slots into one `n x d` matrix.
pub fn fuser_forward(tape: &mut Tape, kind: FuserKind, slots: &[Var], w: &[Var]) -> Result<Var, OpError> {
    let first = *slots
        .first()
        .ok_or_else(|| OpError::Dimension("fuser needs at least one slot".into()))?;
    let shape = tape.shape(first);
    if let Some(bad) = slots.iter().find(|&&s| tape.shape(s) != shape) {
        return Err(OpError::Dimension(format!(
            "slot shape {:?} differs from {:?}",
            tape.shape(*bad),
            shape
        )));
    }
    expect_params(kind.name(), w, kind.param_shapes(slots.len(), shape.1).len())?;
    match kind {
        FuserKind::Concat => {
            let cat = tape.concat_cols(slots)?;
            Ok(tape.matmul(cat, w[0])?)
        }
        FuserKind::Max => {
            let mut out = first;
            for &s in &slots[1..] {
                out = tape.maximum(out, s)?;
            }
            Ok(out)
        }
        FuserKind::Lstm => lstm_attention(tape, slots, w),
    }
}

/// One LSTM cell run over the slot sequence per node, steps weighted by a
/// softmax over learned step scores, then projected.
fn lstm_attention(tape: &mut Tape, slots: &[Var], w: &[Var]) -> Result<Var, OpError> {
    let (w_x, w_h, bias, att, w_o) = (w[0], w[1], w[2], w[3], w[4]);
    let (n, d) = tape.shape(slots[0]);
    let mut h = tape.constant(Tensor::zeros(n, d));
    let mut c = tape.constant(Tensor::zeros(n, d));
    let mut outputs = Vec::with_capacity(slots.len());
    for &x in slots {
        let gx = tape.matmul(x, w_x)?;
        let gh = tape.matmul(h, w_h)?;
        let g = tape.add(gx, gh)?;
        let g = tape.add_row(g, bias)?;
        let i = tape.slice_cols(g, 0, d)?;
        let i = tape.sigmoid(i)?;
        let f = tape.slice_cols(g, d, 2 * d)?;
        let f = tape.sigmoid(f)?;
        let cand = tape.slice_cols(g, 2 * d, 3 * d)?;
        let cand = tape.tanh(cand)?;
        let o = tape.slice_cols(g, 3 * d, 4 * d)?;
        let o = tape.sigmoid(o)?;
        let fc = tape.hadamard(f, c)?;
        let ig = tape.hadamard(i, cand)?;
        c = tape.add(fc, ig)?;
        let tc = tape.tanh(c)?;
        h = tape.hadamard(o, tc)?;
        outputs.push(h);
    }
    let scores: Vec<Var> = outputs
        .iter()
        .map(|&o| tape.matmul(o, att))
        .collect::<Result<_, _>>()?;
    let scores = tape.concat_cols(&scores)?;
    let weights = tape.softmax_rows(scores)?;
    let mut mixed: Option<Var> = None;
    for (t, &o) in outputs.iter().enumerate() {
        let wt = tape.slice_cols(weights, t, t + 1)?;
        let term = tape.row_mul(o, wt)?;
        mixed = Some(match mixed {
            None => term,
            Some(acc) => tape.add(acc, term)?,
        });
    }
    let mixed = mixed.expect("at least one slot");
    Ok(tape.matmul(mixed, w_o)?)
}
