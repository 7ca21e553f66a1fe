use serde::{Deserialize, Serialize};

use super::edge::Candidate;
use super::{EdgeId, Genotype, GraphContext, MixedEdge, Mode, SearchConfig, SupernetError};
use crate::numkit::{Param, ParamId, SeededRng, Tape, Tensor, Var};
use crate::opspace::{
    agg_forward, apply_gate, fuser_forward, glorot, init_agg_params, init_fuser_params, AggOpKind, FuserKind,
    GateKind, OpContext, OpParams,
};

/// Affine map `x W + b`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Linear {
    pub weight: Param,
    pub bias: Param,
}

impl Linear {
    /// Glorot weight, zero bias.
    pub fn new(input: usize, output: usize, rng: &mut SeededRng) -> Self {
        Linear {
            weight: Param::new(glorot(input, output, rng)),
            bias: Param::new(Tensor::zeros(1, output)),
        }
    }

    pub fn forward(&self, tape: &mut Tape, x: Var) -> Result<Var, SupernetError> {
        let w = tape.param(&self.weight);
        let b = tape.param(&self.bias);
        let y = tape.matmul(x, w)?;
        Ok(tape.add_row(y, b)?)
    }

    pub fn params_mut(&mut self) -> [&mut Param; 2] {
        [&mut self.weight, &mut self.bias]
    }
}

/// The supernet and, when every edge holds one candidate, a plain model.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Supernet {
    pub config: SearchConfig,
    pub in_dim: usize,
    pub num_classes: usize,
    pub input: Linear,
    pub micro: Vec<MixedEdge<AggOpKind>>,
    pub gates: Vec<MixedEdge<GateKind>>,
    pub fuser: MixedEdge<FuserKind>,
    pub classifier: Linear,
    /// Current temperature of the mixing softmax.
    pub tau: f64,
}

fn alpha_init(seed: u64, edge: EdgeId, kind: &str) -> Param {
    let mut rng = SeededRng::new(seed, format!("init/alpha/{edge}/{kind}"));
    Param::new(Tensor::scalar(rng.uniform_range(-1e-3, 1e-3)))
}

fn mixed<K: Candidate>(
    seed: u64,
    id: EdgeId,
    kinds: &[K],
    mut init: impl FnMut(K) -> OpParams,
) -> MixedEdge<K> {
    let alpha = kinds.iter().map(|k| alpha_init(seed, id, k.name())).collect();
    let ops = kinds.iter().map(|&k| init(k)).collect();
    MixedEdge::new(id, kinds.to_vec(), alpha, ops)
}

impl Supernet {
    /// Full candidate sets on every edge.
    pub fn build(in_dim: usize, num_classes: usize, config: &SearchConfig) -> Result<Self, SupernetError> {
        Self::with_candidates(
            in_dim,
            num_classes,
            config,
            &vec![AggOpKind::ALL.to_vec(); config.layers],
            &vec![GateKind::ALL.to_vec(); config.layers.saturating_sub(1)],
            &FuserKind::ALL,
        )
    }

    /// A one-candidate-per-edge network. Parameters come from the same
    /// seeded streams as [`Supernet::build`], so it matches the full
    /// supernet run in discrete mode on this genotype.
    pub fn from_genotype(
        genotype: &Genotype,
        in_dim: usize,
        num_classes: usize,
        config: &SearchConfig,
    ) -> Result<Self, SupernetError> {
        if genotype.layers.len() != config.layers || genotype.gates.len() + 1 != config.layers {
            return Err(SupernetError::GenotypeMismatch(format!(
                "{} layers and {} gates for a {}-layer network",
                genotype.layers.len(),
                genotype.gates.len(),
                config.layers
            )));
        }
        let layers: Vec<Vec<AggOpKind>> = genotype.layers.iter().map(|&k| vec![k]).collect();
        let gates: Vec<Vec<GateKind>> = genotype.gates.iter().map(|&g| vec![g]).collect();
        Self::with_candidates(in_dim, num_classes, config, &layers, &gates, &[genotype.fuser])
    }

    pub fn with_candidates(
        in_dim: usize,
        num_classes: usize,
        config: &SearchConfig,
        layers: &[Vec<AggOpKind>],
        gates: &[Vec<GateKind>],
        fusers: &[FuserKind],
    ) -> Result<Self, SupernetError> {
        config.validate()?;
        if layers.len() != config.layers || gates.len() + 1 != config.layers {
            return Err(SupernetError::InvalidConfig("candidate lists do not match the layer count".into()));
        }
        if layers.iter().any(Vec::is_empty) || gates.iter().any(Vec::is_empty) || fusers.is_empty() {
            return Err(SupernetError::InvalidConfig("every edge needs at least one candidate".into()));
        }
        let seed = config.seed;
        let d = config.hidden;
        let l_total = config.layers;
        let micro = layers
            .iter()
            .enumerate()
            .map(|(i, kinds)| {
                let l = i + 1;
                mixed(seed, EdgeId::Micro(l), kinds, |k| {
                    init_agg_params(k, d, &mut SeededRng::new(seed, format!("init/micro{l}/{}", k.name())))
                })
            })
            .collect();
        let gates = gates
            .iter()
            .enumerate()
            .map(|(i, kinds)| mixed(seed, EdgeId::Gate(i + 1), kinds, |_| OpParams { params: vec![] }))
            .collect();
        let fuser = mixed(seed, EdgeId::Fuser, fusers, |k| {
            init_fuser_params(k, l_total, d, &mut SeededRng::new(seed, format!("init/fuser/{}", k.name())))
        });
        Ok(Supernet {
            config: config.clone(),
            in_dim,
            num_classes,
            input: Linear::new(in_dim, d, &mut SeededRng::new(seed, "init/input")),
            micro,
            gates,
            fuser,
            classifier: Linear::new(d, num_classes, &mut SeededRng::new(seed, "init/classifier")),
            tau: config.tau_max,
        })
    }

    pub fn num_edges(&self) -> usize {
        self.micro.len() + self.gates.len() + 1
    }

    /// Edge ids in wiring order: micro layers, gates, fuser.
    pub fn edge_ids(&self) -> Vec<EdgeId> {
        let mut ids: Vec<EdgeId> = self.micro.iter().map(|e| e.id).collect();
        ids.extend(self.gates.iter().map(|e| e.id));
        ids.push(self.fuser.id);
        ids
    }

    /// Candidate names and scores of one edge.
    pub fn edge_candidates(&self, id: EdgeId) -> (Vec<&'static str>, Vec<f64>) {
        fn view<K: Candidate>(e: &MixedEdge<K>) -> (Vec<&'static str>, Vec<f64>) {
            (e.kinds.iter().map(|k| k.name()).collect(), e.alpha_values())
        }
        match id {
            EdgeId::Micro(l) => view(&self.micro[l - 1]),
            EdgeId::Gate(l) => view(&self.gates[l - 1]),
            EdgeId::Fuser => view(&self.fuser),
        }
    }

    pub fn edge_len(&self, id: EdgeId) -> usize {
        self.edge_candidates(id).0.len()
    }

    pub fn edge_expectation_weights(&self, id: EdgeId) -> Vec<f64> {
        match id {
            EdgeId::Micro(l) => self.micro[l - 1].expectation_weights(self.tau),
            EdgeId::Gate(l) => self.gates[l - 1].expectation_weights(self.tau),
            EdgeId::Fuser => self.fuser.expectation_weights(self.tau),
        }
    }

    /// Keeps only the candidate at `position` on edge `id`.
    pub fn fix_edge(&mut self, id: EdgeId, position: usize) {
        match id {
            EdgeId::Micro(l) => self.micro[l - 1].fix(position),
            EdgeId::Gate(l) => self.gates[l - 1].fix(position),
            EdgeId::Fuser => self.fuser.fix(position),
        }
    }

    /// The architecture when every edge holds exactly one candidate.
    pub fn genotype(&self) -> Option<Genotype> {
        let single = self.micro.iter().all(|e| e.len() == 1)
            && self.gates.iter().all(|e| e.len() == 1)
            && self.fuser.len() == 1;
        single.then(|| {
            Genotype::new(
                self.micro.iter().map(|e| e.kinds[0]).collect(),
                self.gates.iter().map(|e| e.kinds[0]).collect(),
                self.fuser.kinds[0],
            )
        })
    }

    /// Model weights `w`: projections and every candidate's parameters.
    pub fn weight_params_mut(&mut self) -> Vec<&mut Param> {
        let mut out: Vec<&mut Param> = Vec::new();
        out.extend(self.input.params_mut());
        for e in &mut self.micro {
            out.extend(e.params_mut());
        }
        out.extend(self.fuser.params_mut());
        out.extend(self.classifier.params_mut());
        out
    }

    /// Architecture scores `alpha` of every edge.
    pub fn alpha_params_mut(&mut self) -> Vec<&mut Param> {
        let mut out: Vec<&mut Param> = Vec::new();
        for e in &mut self.micro {
            out.extend(e.alpha.iter_mut());
        }
        for e in &mut self.gates {
            out.extend(e.alpha.iter_mut());
        }
        out.extend(self.fuser.alpha.iter_mut());
        out
    }

    pub fn weight_ids(&mut self) -> Vec<ParamId> {
        self.weight_params_mut().iter().map(|p| p.id()).collect()
    }

    pub fn alpha_ids(&mut self) -> Vec<ParamId> {
        self.alpha_params_mut().iter().map(|p| p.id()).collect()
    }

    pub fn zero_grad(&mut self) {
        for p in self.weight_params_mut() {
            p.zero_grad();
        }
        for p in self.alpha_params_mut() {
            p.zero_grad();
        }
    }

    pub fn weight_count(&mut self) -> usize {
        self.weight_params_mut().iter().map(|p| p.numel()).sum()
    }

    /// Records a forward pass on `tape` and returns the `n x p` logits.
    /// `rng` supplies Gumbel noise in [`Mode::Gumbel`] and is untouched
    /// otherwise; dropout draws from the tape's own stream.
    pub fn forward(
        &self,
        tape: &mut Tape,
        ctx: &GraphContext,
        mode: Mode<'_>,
        train: bool,
        rng: &mut SeededRng,
    ) -> Result<Var, SupernetError> {
        if ctx.hops.len() < self.micro.len() {
            return Err(SupernetError::InvalidConfig(format!(
                "graph context has {} hops, network needs {}",
                ctx.hops.len(),
                self.micro.len()
            )));
        }
        if ctx.feature_dim() != self.in_dim {
            return Err(SupernetError::InvalidConfig(format!(
                "feature width {} but network expects {}",
                ctx.feature_dim(),
                self.in_dim
            )));
        }
        if let Mode::Discrete(g) = mode {
            if g.layers.len() != self.micro.len() || g.gates.len() != self.gates.len() {
                return Err(SupernetError::GenotypeMismatch(g.to_string()));
            }
        }
        let cfg = &self.config;
        let tau = self.tau;
        let x = tape.constant_shared(ctx.features.clone());
        let h0 = self.input.forward(tape, x)?;

        let mut h = h0;
        let mut outputs = Vec::with_capacity(self.micro.len());
        for (i, edge) in self.micro.iter().enumerate() {
            let layer = i + 1;
            let chosen = match mode {
                Mode::Discrete(g) => Some(g.layers[i]),
                _ => None,
            };
            let plan = edge.plan(mode, chosen, rng)?;
            let op_ctx = OpContext {
                h_prev: h,
                h0,
                hop: ctx.hop(layer),
                layer,
                train,
                activation: cfg.activation,
                dropout: cfg.dropout,
                hyper: &cfg.hyper,
            };
            h = edge.mix(tape, &plan, tau, |tape, pos| {
                let w = edge.ops[pos].register(tape);
                Ok(agg_forward(tape, edge.kinds[pos], &w, &op_ctx)?)
            })?;
            outputs.push(h);
        }

        let mut slots = Vec::with_capacity(outputs.len());
        for (i, edge) in self.gates.iter().enumerate() {
            let chosen = match mode {
                Mode::Discrete(g) => Some(g.gates[i]),
                _ => None,
            };
            let plan = edge.plan(mode, chosen, rng)?;
            let out = outputs[i];
            slots.push(edge.mix(tape, &plan, tau, |tape, pos| Ok(apply_gate(tape, edge.kinds[pos], out)))?);
        }
        slots.push(*outputs.last().expect("at least one layer"));

        let chosen = match mode {
            Mode::Discrete(g) => Some(g.fuser),
            _ => None,
        };
        let plan = self.fuser.plan(mode, chosen, rng)?;
        let fused = self.fuser.mix(tape, &plan, tau, |tape, pos| {
            let w = self.fuser.ops[pos].register(tape);
            Ok(fuser_forward(tape, self.fuser.kinds[pos], &slots, &w)?)
        })?;
        let fused = tape.dropout(fused, cfg.dropout, train)?;
        self.classifier.forward(tape, fused)
    }

    /// Evaluation-mode logits (no dropout, no noise).
    pub fn logits(&self, ctx: &GraphContext, mode: Mode<'_>) -> Result<Tensor, SupernetError> {
        let mut tape = Tape::new(self.config.seed);
        let mut rng = SeededRng::new(self.config.seed, "eval");
        let out = self.forward(&mut tape, ctx, mode, false, &mut rng)?;
        Ok(tape.value(out).clone())
    }
}
