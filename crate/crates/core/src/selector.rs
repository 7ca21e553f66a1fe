//! Architecture selection from a trained supernet: leave-one-out scoring of
//! every candidate on every edge, edge by edge, plus the score-magnitude and
//! validation-loss baselines.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::graphcore::{d_hete, one_hot, predictions_one_hot};
use crate::numkit::{SeededRng, Tensor};
pub use crate::supernet::Genotype;
use crate::supernet::{
    weight_step, EdgeId, GraphContext, Mode, SearchOptimizers, SplitRows, Supernet, SupernetError,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    /// Keep the candidate whose removal gives the smallest heterophily distance.
    #[default]
    HeteArgmin,
    /// Keep the candidate whose removal gives the largest heterophily distance.
    HeteArgmax,
    /// Keep the candidate with the largest expectation-mode weight.
    ArgmaxAlpha,
    /// Keep the candidate whose removal raises validation loss the most.
    ValLoss,
}

impl Criterion {
    pub const ALL: [Criterion; 4] = [
        Criterion::HeteArgmin,
        Criterion::HeteArgmax,
        Criterion::ArgmaxAlpha,
        Criterion::ValLoss,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Criterion::HeteArgmin => "hete_argmin",
            Criterion::HeteArgmax => "hete_argmax",
            Criterion::ArgmaxAlpha => "argmax_alpha",
            Criterion::ValLoss => "val_loss",
        }
    }

    /// Whether the best score is the smallest one.
    pub fn minimizes(self) -> bool {
        self == Criterion::HeteArgmin
    }

    fn random_order(self) -> bool {
        matches!(self, Criterion::HeteArgmin | Criterion::HeteArgmax)
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Criterion {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Criterion::ALL
            .iter()
            .copied()
            .find(|c| c.name() == s)
            .ok_or_else(|| format!("unknown criterion {s:?}"))
    }
}

/// Which nodes enter the heterophily matrices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeteNodes {
    #[default]
    TrainVal,
    All,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SelectOptions {
    pub criterion: Criterion,
    pub seed: u64,
    pub fine_tune_epochs: usize,
    pub hete_nodes: HeteNodes,
    pub source: Option<String>,
}

impl Default for SelectOptions {
    fn default() -> Self {
        SelectOptions {
            criterion: Criterion::HeteArgmin,
            seed: 0,
            fine_tune_epochs: 0,
            hete_nodes: HeteNodes::TrainVal,
            source: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeReport {
    pub edge: EdgeId,
    /// Position in the processing order, from 0.
    pub order: usize,
    pub candidates: Vec<String>,
    /// One score per candidate. Leave-one-out criteria score the network
    /// with that candidate removed; a lone candidate is scored unmasked.
    pub scores: Vec<f64>,
    pub alpha_weights: Vec<f64>,
    pub chosen: String,
    /// The edge had a single candidate, so there was no choice.
    pub forced: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionReport {
    pub criterion: Criterion,
    pub edges: Vec<EdgeReport>,
}

/// Evaluation context for scoring.
pub struct Scorer<'a> {
    pub ctx: &'a GraphContext,
    pub rows: &'a SplitRows,
    mask: Vec<bool>,
    truth: Tensor,
}

impl<'a> Scorer<'a> {
    pub fn new(ctx: &'a GraphContext, rows: &'a SplitRows, nodes: HeteNodes) -> Self {
        let n = ctx.num_nodes();
        let mask = match nodes {
            HeteNodes::All => vec![true; n],
            HeteNodes::TrainVal => {
                let mut m = vec![false; n];
                for &v in rows.train.iter().chain(rows.val.iter()) {
                    m[v] = true;
                }
                m
            }
        };
        let truth = one_hot(&ctx.labels, ctx.num_classes, Some(&mask));
        Scorer { ctx, rows, mask, truth }
    }

    /// Heterophily distance of the predictions in `logits` to the labels,
    /// over the scorer's node set and the 1-hop neighbor matrix.
    pub fn hete_distance(&self, logits: &Tensor) -> f64 {
        let pred = predictions_one_hot(logits, &self.mask);
        d_hete(&pred, &self.truth, &self.ctx.hop(1).adjacency, &self.mask)
    }

    /// Mean validation cross-entropy.
    pub fn val_loss(&self, logits: &Tensor) -> f64 {
        let rows = &self.rows.val;
        let total: f64 = rows
            .iter()
            .map(|&r| {
                let row = logits.row(r);
                let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let lse = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
                lse - row[self.ctx.labels[r]]
            })
            .sum();
        total / rows.len().max(1) as f64
    }

    fn score(&self, logits: &Tensor, criterion: Criterion) -> f64 {
        match criterion {
            Criterion::ValLoss => self.val_loss(logits),
            _ => self.hete_distance(logits),
        }
    }
}

/// Heterophily distance of the network with candidate `position` removed
/// from edge `edge` (expectation weights, no noise, no dropout).
pub fn score_without(net: &Supernet, edge: EdgeId, position: usize, scorer: &Scorer<'_>) -> Result<f64, SupernetError> {
    if net.edge_len(edge) < 2 {
        return Err(SupernetError::AllMasked(edge));
    }
    let logits = net.logits(scorer.ctx, Mode::LeaveOneOut { edge, position })?;
    Ok(scorer.hete_distance(&logits))
}

/// Index of the best score; ties go to the larger weight, then the earlier
/// position.
pub fn pick(scores: &[f64], weights: &[f64], minimize: bool) -> usize {
    let mut best = 0;
    for i in 1..scores.len() {
        let better = if minimize {
            scores[i] < scores[best]
        } else {
            scores[i] > scores[best]
        };
        if better || (scores[i] == scores[best] && weights[i] > weights[best]) {
            best = i;
        }
    }
    best
}

/// Discretizes a copy of `net` edge by edge under `opts.criterion`.
pub fn select(
    net: &Supernet,
    ctx: &GraphContext,
    rows: &SplitRows,
    opts: &SelectOptions,
) -> Result<(Genotype, SelectionReport), SupernetError> {
    let mut net = net.clone();
    let scorer = Scorer::new(ctx, rows, opts.hete_nodes);
    let criterion = opts.criterion;
    let mut order = net.edge_ids();
    if order.is_empty() {
        return Err(SupernetError::InvalidConfig("supernet has no edges".into()));
    }
    if criterion.random_order() {
        SeededRng::new(opts.seed, "select/order").shuffle(&mut order);
    }
    let mut opt = SearchOptimizers::new(&net);
    let mut edges = Vec::with_capacity(order.len());
    for (step, &edge) in order.iter().enumerate() {
        let (names, _) = net.edge_candidates(edge);
        let candidates: Vec<String> = names.iter().map(|s| s.to_string()).collect();
        let weights = net.edge_expectation_weights(edge);
        let forced = candidates.len() == 1;
        let scores: Vec<f64> = if criterion == Criterion::ArgmaxAlpha {
            weights.clone()
        } else if forced {
            vec![scorer.score(&net.logits(ctx, Mode::Expectation)?, criterion)]
        } else {
            (0..candidates.len())
                .map(|p| {
                    let logits = net.logits(ctx, Mode::LeaveOneOut { edge, position: p })?;
                    Ok(scorer.score(&logits, criterion))
                })
                .collect::<Result<_, SupernetError>>()?
        };
        let chosen = pick(&scores, &weights, criterion.minimizes());
        net.fix_edge(edge, chosen);
        for e in 0..opts.fine_tune_epochs {
            weight_step(&mut net, ctx, rows, &mut opt, &format!("select/step={step}/epoch={e}"))?;
        }
        edges.push(EdgeReport {
            edge,
            order: step,
            chosen: candidates[chosen].clone(),
            candidates,
            scores,
            alpha_weights: weights,
            forced,
        });
    }
    let mut genotype = net.genotype().expect("every edge was fixed");
    genotype.criterion = Some(criterion.name().to_string());
    genotype.seed = Some(opts.seed);
    genotype.source = opts.source.clone();
    Ok((genotype, SelectionReport { criterion, edges }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pick_directions_and_ties() {
        assert_eq!(pick(&[0.3, 0.1, 0.2], &[0.2, 0.3, 0.5], true), 1);
        assert_eq!(pick(&[0.3, 0.1, 0.2], &[0.2, 0.3, 0.5], false), 0);
        assert_eq!(pick(&[1.0, 1.0, 1.0], &[0.2, 0.5, 0.3], true), 1);
        assert_eq!(pick(&[1.0, 1.0], &[0.5, 0.5], false), 0);
        assert_eq!(pick(&[0.5, 0.3, 0.2], &[0.5, 0.3, 0.2], false), 0);
    }

    #[test]
    fn criterion_names_round_trip() {
        for c in Criterion::ALL {
            assert_eq!(c.name().parse::<Criterion>().unwrap(), c);
            assert_eq!(serde_json::to_string(&c).unwrap(), format!("\"{}\"", c.name()));
        }
    }
}
