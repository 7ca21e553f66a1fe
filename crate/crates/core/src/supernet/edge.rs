use std::fmt;
use std::hash::Hash;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::{Genotype, SupernetError};
use crate::numkit::{softmax_slice, Param, SeededRng, Tape, Tensor, Var};
use crate::opspace::{AggOpKind, FuserKind, GateKind, OpParams};

/// Operation kinds that can sit on a mixed edge.
pub trait Candidate: Copy + Eq + Hash + fmt::Debug + fmt::Display + Serialize + DeserializeOwned {
    fn name(self) -> &'static str;
    fn catalog_index(self) -> usize;
}

impl Candidate for AggOpKind {
    fn name(self) -> &'static str {
        AggOpKind::name(self)
    }

    fn catalog_index(self) -> usize {
        AggOpKind::catalog_index(self)
    }
}

impl Candidate for GateKind {
    fn name(self) -> &'static str {
        GateKind::name(self)
    }

    fn catalog_index(self) -> usize {
        GateKind::catalog_index(self)
    }
}

impl Candidate for FuserKind {
    fn name(self) -> &'static str {
        FuserKind::name(self)
    }

    fn catalog_index(self) -> usize {
        FuserKind::catalog_index(self)
    }
}

/// Position of a mixed edge in the supernet. Layer numbers are 1-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "edge", content = "layer", rename_all = "lowercase")]
pub enum EdgeId {
    Micro(usize),
    Gate(usize),
    Fuser,
}

impl fmt::Display for EdgeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EdgeId::Micro(l) => write!(f, "layer{l}"),
            EdgeId::Gate(l) => write!(f, "gate{l}"),
            EdgeId::Fuser => f.write_str("fuser"),
        }
    }
}

/// How candidate outputs are weighted in a forward pass.
#[derive(Clone, Copy, Debug)]
pub enum Mode<'a> {
    /// Softmax of `(alpha + g) / tau` with fresh Gumbel noise `g`.
    Gumbel,
    /// Softmax of `alpha / tau`.
    Expectation,
    /// Exactly the genotype's operation on every edge.
    Discrete(&'a Genotype),
    /// Expectation weights with one candidate (by position) removed from one
    /// edge and the rest renormalized.
    LeaveOneOut { edge: EdgeId, position: usize },
}

/// Active candidates of one edge, each with its architecture score and its
/// operation parameters, kept in catalog order.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(bound = "K: Candidate")]
pub struct MixedEdge<K: Candidate> {
    pub id: EdgeId,
    pub kinds: Vec<K>,
    pub alpha: Vec<Param>,
    pub ops: Vec<OpParams>,
}

impl<K: Candidate> MixedEdge<K> {
    pub fn new(id: EdgeId, kinds: Vec<K>, alpha: Vec<Param>, ops: Vec<OpParams>) -> Self {
        debug_assert_eq!(kinds.len(), alpha.len());
        debug_assert_eq!(kinds.len(), ops.len());
        MixedEdge { id, kinds, alpha, ops }
    }

    pub fn len(&self) -> usize {
        self.kinds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kinds.is_empty()
    }

    pub fn position(&self, kind: K) -> Option<usize> {
        self.kinds.iter().position(|&k| k == kind)
    }

    pub fn alpha_values(&self) -> Vec<f64> {
        self.alpha.iter().map(|a| a.value.item()).collect()
    }

    /// Mixing weights over all active candidates; a masked position gets 0.
    pub fn weights(&self, tau: f64, noise: Option<&[f64]>, masked: Option<usize>) -> Vec<f64> {
        let keep: Vec<usize> = (0..self.len()).filter(|&i| Some(i) != masked).collect();
        let logits: Vec<f64> = keep
            .iter()
            .map(|&i| (self.alpha[i].value.item() + noise.map_or(0.0, |g| g[i])) / tau)
            .collect();
        let mut w = vec![0.0; self.len()];
        for (&i, p) in keep.iter().zip(softmax_slice(&logits)) {
            w[i] = p;
        }
        w
    }

    /// Expectation-mode weights at temperature `tau`.
    pub fn expectation_weights(&self, tau: f64) -> Vec<f64> {
        self.weights(tau, None, None)
    }

    /// Removes the candidate at `position` along with its score and parameters.
    pub fn remove(&mut self, position: usize) -> K {
        self.alpha.remove(position);
        self.ops.remove(position);
        self.kinds.remove(position)
    }

    /// Keeps only the candidate at `position`.
    pub fn fix(&mut self, position: usize) {
        let kind = self.kinds[position];
        let alpha = self.alpha.swap_remove(position);
        let op = self.ops.swap_remove(position);
        self.kinds = vec![kind];
        self.alpha = vec![alpha];
        self.ops = vec![op];
    }

    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut Param> {
        self.ops.iter_mut().flat_map(|o| o.params.iter_mut())
    }

    /// Chooses which candidates run and draws any Gumbel noise.
    pub(crate) fn plan(&self, mode: Mode<'_>, discrete: Option<K>, rng: &mut SeededRng) -> Result<EdgePlan, SupernetError> {
        if self.is_empty() {
            return Err(SupernetError::AllMasked(self.id));
        }
        let all: Vec<usize> = (0..self.len()).collect();
        let plan = match mode {
            Mode::Gumbel => {
                let noise = crate::numkit::gumbel_sample(rng, 1, self.len()).into_data();
                EdgePlan {
                    keep: all,
                    noise: Some(noise),
                }
            }
            Mode::Expectation => EdgePlan { keep: all, noise: None },
            Mode::Discrete(_) => {
                let kind = discrete.expect("discrete mode supplies a kind");
                let pos = self.position(kind).ok_or_else(|| SupernetError::NotActive {
                    edge: self.id,
                    kind: kind.name().to_string(),
                })?;
                EdgePlan {
                    keep: vec![pos],
                    noise: None,
                }
            }
            Mode::LeaveOneOut { edge, position } if edge == self.id => {
                if position >= self.len() {
                    return Err(SupernetError::NotActive {
                        edge: self.id,
                        kind: format!("position {position}"),
                    });
                }
                let keep: Vec<usize> = all.into_iter().filter(|&i| i != position).collect();
                if keep.is_empty() {
                    return Err(SupernetError::AllMasked(self.id));
                }
                EdgePlan { keep, noise: None }
            }
            Mode::LeaveOneOut { .. } => EdgePlan { keep: all, noise: None },
        };
        Ok(plan)
    }

    /// Blends the outputs of the planned candidates. `run(tape, position)`
    /// evaluates one candidate; a single planned candidate is returned as is.
    pub(crate) fn mix(
        &self,
        tape: &mut Tape,
        plan: &EdgePlan,
        tau: f64,
        mut run: impl FnMut(&mut Tape, usize) -> Result<Var, SupernetError>,
    ) -> Result<Var, SupernetError> {
        if plan.keep.len() == 1 {
            return run(tape, plan.keep[0]);
        }
        let scores: Vec<Var> = plan.keep.iter().map(|&i| tape.param(&self.alpha[i])).collect();
        let mut logits = tape.concat_cols(&scores)?;
        if let Some(noise) = &plan.noise {
            let g: Vec<f64> = plan.keep.iter().map(|&i| noise[i]).collect();
            let g = tape.constant(Tensor::row_vector(&g));
            logits = tape.add(logits, g)?;
        }
        let logits = tape.scale(logits, 1.0 / tau)?;
        let weights = tape.softmax_rows(logits)?;
        let mut out: Option<Var> = None;
        for (slot, &i) in plan.keep.iter().enumerate() {
            let y = run(tape, i)?;
            let w = tape.slice_cols(weights, slot, slot + 1)?;
            let term = tape.scale_by(y, w)?;
            out = Some(match out {
                None => term,
                Some(acc) => tape.add(acc, term)?,
            });
        }
        Ok(out.expect("at least two planned candidates"))
    }
}

pub(crate) struct EdgePlan {
    pub keep: Vec<usize>,
    pub noise: Option<Vec<f64>>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn edge(alphas: &[f64]) -> MixedEdge<AggOpKind> {
        let kinds = AggOpKind::ALL[..alphas.len()].to_vec();
        let alpha = alphas.iter().map(|&a| Param::new(Tensor::scalar(a))).collect();
        let ops = alphas.iter().map(|_| OpParams { params: vec![] }).collect();
        MixedEdge::new(EdgeId::Micro(1), kinds, alpha, ops)
    }

    #[test]
    fn expectation_weights_are_symmetric_for_equal_scores() {
        assert_eq!(edge(&[0.3; 4]).expectation_weights(1.0), vec![0.25; 4]);
    }

    #[test]
    fn singleton_weight_is_one() {
        let e = edge(&[-2.0]);
        assert_eq!(e.weights(5.0, Some(&[3.0]), None), vec![1.0]);
    }

    #[test]
    fn low_temperature_concentrates_mass() {
        let w = edge(&[1.0, 0.0]).expectation_weights(0.01);
        assert!(w[0] > 0.999);
    }

    #[test]
    fn masked_candidate_gets_zero_and_rest_renormalizes() {
        let w = edge(&[0.1, 0.5, -0.2]).weights(2.0, None, Some(1));
        assert_eq!(w[1], 0.0);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn remove_and_fix() {
        let mut e = edge(&[0.1, 0.2, 0.3]);
        assert_eq!(e.remove(0), AggOpKind::Sage);
        assert_eq!(e.kinds, vec![AggOpKind::SageSum, AggOpKind::SageMax]);
        e.fix(1);
        assert_eq!(e.kinds, vec![AggOpKind::SageMax]);
        assert_eq!(e.alpha_values(), vec![0.3]);
    }

    #[test]
    fn edge_id_json() {
        assert_eq!(serde_json::to_string(&EdgeId::Micro(2)).unwrap(), r#"{"edge":"micro","layer":2}"#);
        assert_eq!(serde_json::to_string(&EdgeId::Fuser).unwrap(), r#"{"edge":"fuser"}"#);
    }
}
