use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{expect_params, glorot, HopGraph, OpError, OpParams};
use crate::numkit::{Activation, Param, SeededRng, Tape, Tensor, Var};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AggOpKind {
    #[serde(rename = "SAGE")]
    Sage,
    #[serde(rename = "SAGE_SUM")]
    SageSum,
    #[serde(rename = "SAGE_MAX")]
    SageMax,
    #[serde(rename = "GCN")]
    Gcn,
    #[serde(rename = "GIN")]
    Gin,
    #[serde(rename = "GAT")]
    Gat,
    #[serde(rename = "GAT_SYM")]
    GatSym,
    #[serde(rename = "GAT_COS")]
    GatCos,
    #[serde(rename = "GAT_LIN")]
    GatLin,
    #[serde(rename = "GAT_GEN_LIN")]
    GatGenLin,
    #[serde(rename = "GENIEPATH", alias = "GeniePATH")]
    GeniePath,
    #[serde(rename = "GCNII")]
    Gcnii,
    #[serde(rename = "FAGCN")]
    Fagcn,
    #[serde(rename = "GPRGNN")]
    Gprgnn,
    #[serde(rename = "SUPERGAT")]
    SuperGat,
    #[serde(rename = "GCN_CHEB")]
    GcnCheb,
    #[serde(rename = "APPNP")]
    Appnp,
    #[serde(rename = "SGC")]
    Sgc,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OpTag {
    Homo,
    Hete,
}

impl OpTag {
    pub fn name(self) -> &'static str {
        match self {
            OpTag::Homo => "homo",
            OpTag::Hete => "hete",
        }
    }
}

impl AggOpKind {
    /// Catalog order: the homophily group, then the heterophily group.
    pub const ALL: [AggOpKind; 18] = [
        AggOpKind::Sage,
        AggOpKind::SageSum,
        AggOpKind::SageMax,
        AggOpKind::Gcn,
        AggOpKind::Gin,
        AggOpKind::Gat,
        AggOpKind::GatSym,
        AggOpKind::GatCos,
        AggOpKind::GatLin,
        AggOpKind::GatGenLin,
        AggOpKind::GeniePath,
        AggOpKind::Gcnii,
        AggOpKind::Fagcn,
        AggOpKind::Gprgnn,
        AggOpKind::SuperGat,
        AggOpKind::GcnCheb,
        AggOpKind::Appnp,
        AggOpKind::Sgc,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AggOpKind::Sage => "SAGE",
            AggOpKind::SageSum => "SAGE_SUM",
            AggOpKind::SageMax => "SAGE_MAX",
            AggOpKind::Gcn => "GCN",
            AggOpKind::Gin => "GIN",
            AggOpKind::Gat => "GAT",
            AggOpKind::GatSym => "GAT_SYM",
            AggOpKind::GatCos => "GAT_COS",
            AggOpKind::GatLin => "GAT_LIN",
            AggOpKind::GatGenLin => "GAT_GEN_LIN",
            AggOpKind::GeniePath => "GENIEPATH",
            AggOpKind::Gcnii => "GCNII",
            AggOpKind::Fagcn => "FAGCN",
            AggOpKind::Gprgnn => "GPRGNN",
            AggOpKind::SuperGat => "SUPERGAT",
            AggOpKind::GcnCheb => "GCN_CHEB",
            AggOpKind::Appnp => "APPNP",
            AggOpKind::Sgc => "SGC",
        }
    }

    pub fn tag(self) -> OpTag {
        match self {
            AggOpKind::Gcnii
            | AggOpKind::Fagcn
            | AggOpKind::Gprgnn
            | AggOpKind::SuperGat
            | AggOpKind::GcnCheb
            | AggOpKind::Appnp
            | AggOpKind::Sgc => OpTag::Hete,
            _ => OpTag::Homo,
        }
    }

    pub fn catalog_index(self) -> usize {
        Self::ALL.iter().position(|&k| k == self).expect("every kind is in the catalog")
    }

    /// Shapes of the learnable tensors for hidden width `d`.
    pub fn param_shapes(self, d: usize) -> Vec<(usize, usize)> {
        match self {
            AggOpKind::Sage | AggOpKind::SageSum | AggOpKind::SageMax => vec![(2 * d, d)],
            AggOpKind::Gcn | AggOpKind::Sgc | AggOpKind::SuperGat | AggOpKind::GatCos | AggOpKind::Gcnii => {
                vec![(d, d)]
            }
            AggOpKind::Gin => vec![(1, 1), (d, d), (d, d)],
            AggOpKind::Gat | AggOpKind::GatSym | AggOpKind::GatLin => vec![(d, d), (2 * d, 1)],
            AggOpKind::GatGenLin => vec![(d, d), (d, d), (d, d), (d, 1)],
            AggOpKind::GeniePath => vec![(d, d), (d, d), (d, d), (d, 1), (2 * d, d), (d, d)],
            AggOpKind::Fagcn => vec![(2 * d, 1)],
            AggOpKind::Gprgnn => vec![(1, 1), (1, 1)],
            AggOpKind::GcnCheb => vec![(d, d), (d, d), (d, d)],
            AggOpKind::Appnp => vec![],
        }
    }

    pub fn param_count(self, d: usize) -> usize {
        self.param_shapes(d).iter().map(|(r, c)| r * c).sum()
    }
}

impl fmt::Display for AggOpKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AggOpKind {
    type Err = OpError;

    fn from_str(s: &str) -> Result<Self, OpError> {
        if s == "GeniePATH" {
            return Ok(AggOpKind::GeniePath);
        }
        AggOpKind::ALL
            .iter()
            .copied()
            .find(|k| k.name() == s)
            .ok_or_else(|| OpError::UnknownOp(s.to_string()))
    }
}

/// Fixed scalars of the propagation-style operators.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OpHyper {
    pub gcnii_alpha: f64,
    pub gcnii_lambda: f64,
    pub fagcn_eps: f64,
    pub appnp_alpha: f64,
    pub appnp_iters: usize,
}

impl Default for OpHyper {
    fn default() -> Self {
        OpHyper {
            gcnii_alpha: 0.1,
            gcnii_lambda: 0.5,
            fagcn_eps: 0.3,
            appnp_alpha: 0.1,
            appnp_iters: 10,
        }
    }
}

/// Inputs shared by every aggregator at one layer.
#[derive(Clone, Copy)]
pub struct OpContext<'a> {
    pub h_prev: Var,
    pub h0: Var,
    pub hop: &'a HopGraph,
    /// 1-based layer index.
    pub layer: usize,
    pub train: bool,
    pub activation: Activation,
    pub dropout: f64,
    pub hyper: &'a OpHyper,
}

/// Glorot matrices, `GIN` epsilon at 0 and `GPRGNN` coefficients at
/// `(0.1, 0.9)`.
pub fn init_agg_params(kind: AggOpKind, d: usize, rng: &mut SeededRng) -> OpParams {
    let params = match kind {
        AggOpKind::Gin => vec![Tensor::scalar(0.0), glorot(d, d, rng), glorot(d, d, rng)],
        AggOpKind::Gprgnn => vec![Tensor::scalar(0.1), Tensor::scalar(0.9)],
        _ => kind
            .param_shapes(d)
            .into_iter()
            .map(|(r, c)| glorot(r, c, rng))
            .collect(),
    };
    OpParams {
        params: params.into_iter().map(Param::new).collect(),
    }
}

/// Applies one aggregator; `w` are the kind's parameters registered on `tape`
/// in [`AggOpKind::param_shapes`] order. Returns an `n x d` node matrix.
pub fn agg_forward(tape: &mut Tape, kind: AggOpKind, w: &[Var], ctx: &OpContext<'_>) -> Result<Var, OpError> {
    expect_params(kind.name(), w, kind.param_shapes(0).len())?;
    let n = ctx.hop.num_nodes();
    if tape.shape(ctx.h_prev).0 != n || tape.shape(ctx.h0) != tape.shape(ctx.h_prev) {
        return Err(OpError::Dimension(format!(
            "{kind}: node inputs {:?} / {:?} for {n} nodes",
            tape.shape(ctx.h_prev),
            tape.shape(ctx.h0)
        )));
    }
    let hop = ctx.hop;
    let act = ctx.activation;
    let h = tape.dropout(ctx.h_prev, ctx.dropout, ctx.train)?;

    let out = match kind {
        AggOpKind::Sage | AggOpKind::SageSum | AggOpKind::SageMax => {
            let neigh = match kind {
                AggOpKind::Sage => tape.spmm(&hop.mean, h)?,
                AggOpKind::SageSum => tape.spmm(&hop.adjacency, h)?,
                _ => {
                    let hu = tape.gather_rows(h, &hop.edge_src)?;
                    tape.segment_max(hu, &hop.edges)?
                }
            };
            let cat = tape.concat_cols(&[h, neigh])?;
            let z = tape.matmul(cat, w[0])?;
            tape.activate(z, act)?
        }
        AggOpKind::Gcn => {
            let ph = tape.spmm(&hop.norm, h)?;
            let z = tape.matmul(ph, w[0])?;
            tape.activate(z, act)?
        }
        AggOpKind::Sgc => {
            let ph = tape.spmm(&hop.norm, h)?;
            tape.matmul(ph, w[0])?
        }
        AggOpKind::Gin => {
            let eh = tape.scale_by(h, w[0])?;
            let self_term = tape.add(h, eh)?;
            let neigh = tape.spmm(&hop.adjacency, h)?;
            let z = tape.add(self_term, neigh)?;
            let z = tape.matmul(z, w[1])?;
            let z = tape.relu(z)?;
            tape.matmul(z, w[2])?
        }
        AggOpKind::Gat
        | AggOpKind::GatSym
        | AggOpKind::GatCos
        | AggOpKind::GatLin
        | AggOpKind::GatGenLin
        | AggOpKind::SuperGat => {
            let wh = tape.matmul(h, w[0])?;
            let scores = attention_scores(tape, kind, h, wh, w, hop)?;
            let m = attend(tape, scores, wh, hop)?;
            tape.activate(m, act)?
        }
        AggOpKind::GeniePath => {
            let wh = tape.matmul(h, w[0])?;
            let scores = attention_scores(tape, kind, h, wh, w, hop)?;
            let m = attend(tape, scores, wh, hop)?;
            let cat = tape.concat_cols(&[h, m])?;
            let gate = tape.matmul(cat, w[4])?;
            let gate = tape.sigmoid(gate)?;
            let t = tape.matmul(m, w[5])?;
            let t = tape.tanh(t)?;
            tape.hadamard(gate, t)?
        }
        AggOpKind::Gcnii => {
            let alpha = ctx.hyper.gcnii_alpha;
            let beta = (ctx.hyper.gcnii_lambda / ctx.layer.max(1) as f64 + 1.0).ln();
            let ph = tape.spmm(&hop.norm, h)?;
            let ph = tape.scale(ph, 1.0 - alpha)?;
            let init = tape.scale(ctx.h0, alpha)?;
            let s = tape.add(ph, init)?;
            let keep = tape.scale(s, 1.0 - beta)?;
            let sw = tape.matmul(s, w[0])?;
            let sw = tape.scale(sw, beta)?;
            let z = tape.add(keep, sw)?;
            tape.activate(z, act)?
        }
        AggOpKind::Fagcn => {
            let hv = tape.gather_rows(h, &hop.edge_dst)?;
            let hu = tape.gather_rows(h, &hop.edge_src)?;
            let cat = tape.concat_cols(&[hv, hu])?;
            let coef = tape.matmul(cat, w[0])?;
            let coef = tape.tanh(coef)?;
            let norm = tape.constant_shared(hop.edge_norm.clone());
            let coef = tape.hadamard(coef, norm)?;
            let msg = tape.row_mul(hu, coef)?;
            let agg = tape.scatter_add(msg, &hop.edges)?;
            let init = tape.scale(ctx.h0, ctx.hyper.fagcn_eps)?;
            tape.add(init, agg)?
        }
        AggOpKind::Gprgnn => {
            let a = tape.scale_by(h, w[0])?;
            let ph = tape.spmm(&hop.norm, h)?;
            let b = tape.scale_by(ph, w[1])?;
            tape.add(a, b)?
        }
        AggOpKind::GcnCheb => {
            let ph = tape.spmm(&hop.norm, h)?;
            let lh = tape.sub(ph, h)?;
            let plh = tape.spmm(&hop.norm, lh)?;
            let llh = tape.sub(plh, lh)?;
            let llh2 = tape.scale(llh, 2.0)?;
            let t2 = tape.sub(llh2, h)?;
            let z0 = tape.matmul(h, w[0])?;
            let z1 = tape.matmul(lh, w[1])?;
            let z2 = tape.matmul(t2, w[2])?;
            let z = tape.add(z0, z1)?;
            let z = tape.add(z, z2)?;
            tape.activate(z, act)?
        }
        AggOpKind::Appnp => {
            let alpha = ctx.hyper.appnp_alpha;
            let teleport = tape.scale(h, alpha)?;
            let mut z = h;
            for _ in 0..ctx.hyper.appnp_iters {
                let pz = tape.spmm(&hop.norm, z)?;
                let pz = tape.scale(pz, 1.0 - alpha)?;
                z = tape.add(pz, teleport)?;
            }
            z
        }
    };
    if !tape.value(out).is_finite() {
        return Err(OpError::NonFinite { kind: kind.name() });
    }
    Ok(out)
}

/// Unnormalized per-edge scores `e_vu`, `E x 1`, for the attention family.
fn attention_scores(
    tape: &mut Tape,
    kind: AggOpKind,
    h: Var,
    wh: Var,
    w: &[Var],
    hop: &HopGraph,
) -> Result<Var, OpError> {
    let d = tape.shape(wh).1;
    let scores = match kind {
        AggOpKind::Gat | AggOpKind::GatSym => {
            let a_dst = tape.slice_rows(w[1], 0, d)?;
            let a_src = tape.slice_rows(w[1], d, 2 * d)?;
            let s_dst = tape.matmul(wh, a_dst)?;
            let s_src = tape.matmul(wh, a_src)?;
            let fwd = pair_sum(tape, s_dst, s_src, hop, false)?;
            let fwd = tape.leaky_relu(fwd)?;
            if kind == AggOpKind::GatSym {
                let rev = pair_sum(tape, s_dst, s_src, hop, true)?;
                let rev = tape.leaky_relu(rev)?;
                tape.add(fwd, rev)?
            } else {
                fwd
            }
        }
        AggOpKind::GatLin => {
            let a_dst = tape.slice_rows(w[1], 0, d)?;
            let a_src = tape.slice_rows(w[1], d, 2 * d)?;
            let s_dst = tape.matmul(wh, a_dst)?;
            let s_dst = tape.tanh(s_dst)?;
            let s_src = tape.matmul(wh, a_src)?;
            let s_src = tape.tanh(s_src)?;
            pair_sum(tape, s_dst, s_src, hop, false)?
        }
        AggOpKind::GatCos => {
            let sq = tape.row_dot(wh, wh)?;
            let inv = tape.rsqrt_eps(sq, 1e-12)?;
            let unit = tape.row_mul(wh, inv)?;
            let uv = tape.gather_rows(unit, &hop.edge_dst)?;
            let uu = tape.gather_rows(unit, &hop.edge_src)?;
            tape.row_dot(uv, uu)?
        }
        AggOpKind::SuperGat => {
            let hv = tape.gather_rows(wh, &hop.edge_dst)?;
            let hu = tape.gather_rows(wh, &hop.edge_src)?;
            let dot = tape.row_dot(hv, hu)?;
            tape.scale(dot, 1.0 / (d.max(1) as f64).sqrt())?
        }
        AggOpKind::GatGenLin | AggOpKind::GeniePath => {
            let (wl, wr, v) = (w[1], w[2], w[3]);
            let l = tape.matmul(h, wl)?;
            let r = tape.matmul(h, wr)?;
            let lv = tape.gather_rows(l, &hop.edge_dst)?;
            let ru = tape.gather_rows(r, &hop.edge_src)?;
            let z = tape.add(lv, ru)?;
            let z = tape.tanh(z)?;
            tape.matmul(z, v)?
        }
        _ => unreachable!("not an attention operator"),
    };
    Ok(scores)
}

/// `s_dst[v] + s_src[u]` per edge, or `s_dst[u] + s_src[v]` when reversed.
fn pair_sum(tape: &mut Tape, s_dst: Var, s_src: Var, hop: &HopGraph, reversed: bool) -> Result<Var, OpError> {
    let (di, si) = if reversed {
        (&hop.edge_src, &hop.edge_dst)
    } else {
        (&hop.edge_dst, &hop.edge_src)
    };
    let a = tape.gather_rows(s_dst, di)?;
    let b = tape.gather_rows(s_src, si)?;
    Ok(tape.add(a, b)?)
}

/// `sum_u softmax_u(e_vu) * wh_u`; isolated nodes get zero rows.
fn attend(tape: &mut Tape, scores: Var, wh: Var, hop: &HopGraph) -> Result<Var, OpError> {
    let alpha = tape.segment_softmax(scores, &hop.edges)?;
    let hu = tape.gather_rows(wh, &hop.edge_src)?;
    let msg = tape.row_mul(hu, alpha)?;
    Ok(tape.scatter_add(msg, &hop.edges)?)
}
