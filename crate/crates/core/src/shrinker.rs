//! Progressive training: alternate short bilevel phases with dropping the
//! lowest-weight aggregators from every layer, then train the compact net.

use serde::{Deserialize, Serialize};

use crate::opspace::AggOpKind;
use crate::supernet::{
    bilevel_epoch, temperature, EdgeId, GraphContext, SearchOptimizers, SplitRows, Supernet, SupernetError,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ShrinkPlan {
    pub rounds: usize,
    pub drop_per_round: usize,
    pub epochs_per_round: usize,
    pub compact_epochs: usize,
}

impl Default for ShrinkPlan {
    fn default() -> Self {
        ShrinkPlan {
            rounds: 3,
            drop_per_round: 3,
            epochs_per_round: 200,
            compact_epochs: 1000,
        }
    }
}

impl ShrinkPlan {
    pub fn total_epochs(&self) -> usize {
        self.rounds * self.epochs_per_round + self.compact_epochs
    }

    /// Aggregators left per layer after all rounds, starting from `initial`.
    pub fn final_candidates(&self, initial: usize) -> Option<usize> {
        initial
            .checked_sub(self.rounds * self.drop_per_round)
            .filter(|&n| n >= 1)
    }
}

/// One layer's ranking at drop time, best first, and what was dropped.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerDrop {
    pub layer: usize,
    pub tau: f64,
    pub ranking: Vec<(AggOpKind, f64)>,
    pub dropped: Vec<AggOpKind>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundLog {
    pub round: usize,
    pub layers: Vec<LayerDrop>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ShrinkLog {
    pub rounds: Vec<RoundLog>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub tau: f64,
    pub train_loss: f64,
    pub val_loss: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ShrinkOutcome {
    pub log: ShrinkLog,
    pub history: Vec<EpochRecord>,
}

/// Orders `(kind, weight)` pairs best first: larger weight, then earlier
/// catalog position.
pub fn rank(entries: &mut [(AggOpKind, f64)]) {
    entries.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.0.catalog_index().cmp(&b.0.catalog_index()))
    });
}

/// The `count` lowest-ranked kinds of a ranking, recomputed from the logged
/// weights. Used to replay a [`ShrinkLog`].
pub fn replay_drop(ranking: &[(AggOpKind, f64)], count: usize) -> Vec<AggOpKind> {
    let mut sorted = ranking.to_vec();
    rank(&mut sorted);
    sorted[sorted.len().saturating_sub(count)..]
        .iter()
        .map(|e| e.0)
        .collect()
}

/// Removes the `count` aggregators with the smallest expectation-mode weight
/// (at the network's current temperature) from layer `layer` (1-based).
pub fn drop_ops(net: &mut Supernet, layer: usize, count: usize) -> Result<LayerDrop, SupernetError> {
    let tau = net.tau;
    let edge = net
        .micro
        .get_mut(layer.wrapping_sub(1))
        .ok_or_else(|| SupernetError::InvalidConfig(format!("no layer {layer}")))?;
    if count >= edge.len() && count > 0 {
        return Err(SupernetError::CannotEmpty {
            edge: EdgeId::Micro(layer),
            active: edge.len(),
            requested: count,
        });
    }
    let weights = edge.expectation_weights(tau);
    let mut ranking: Vec<(AggOpKind, f64)> = edge.kinds.iter().copied().zip(weights).collect();
    rank(&mut ranking);
    let dropped: Vec<AggOpKind> = ranking[ranking.len() - count..].iter().map(|e| e.0).collect();
    for kind in &dropped {
        let pos = edge.position(*kind).expect("ranked kinds are active");
        edge.remove(pos);
    }
    Ok(LayerDrop {
        layer,
        tau,
        ranking,
        dropped,
    })
}

/// Runs `rounds` x (`epochs_per_round` bilevel epochs, then drop on every
/// layer), then `compact_epochs` more epochs. The temperature follows one
/// linear schedule over all epochs. Gates and the fuser keep every candidate.
pub fn progressive_train(
    net: &mut Supernet,
    plan: &ShrinkPlan,
    ctx: &GraphContext,
    rows: &SplitRows,
) -> Result<ShrinkOutcome, SupernetError> {
    for (l, e) in net.micro.iter().enumerate() {
        if plan.rounds * plan.drop_per_round >= e.len() && plan.rounds * plan.drop_per_round > 0 {
            return Err(SupernetError::CannotEmpty {
                edge: EdgeId::Micro(l + 1),
                active: e.len(),
                requested: plan.rounds * plan.drop_per_round,
            });
        }
    }
    let total = plan.total_epochs();
    let mut opt = SearchOptimizers::new(net);
    let mut outcome = ShrinkOutcome::default();
    let run_epochs = |net: &mut Supernet, opt: &mut SearchOptimizers, count: usize, history: &mut Vec<EpochRecord>| {
        for _ in 0..count {
            let epoch = opt.epoch;
            net.tau = temperature(epoch, total, &net.config)?;
            let (train_loss, val_loss) = bilevel_epoch(net, ctx, rows, opt)?;
            history.push(EpochRecord {
                epoch,
                tau: net.tau,
                train_loss,
                val_loss,
            });
        }
        Ok::<(), SupernetError>(())
    };
    for round in 1..=plan.rounds {
        run_epochs(net, &mut opt, plan.epochs_per_round, &mut outcome.history)?;
        if total > 0 {
            net.tau = temperature(opt.epoch, total, &net.config)?;
        }
        let layers = (1..=net.micro.len())
            .map(|l| drop_ops(net, l, plan.drop_per_round))
            .collect::<Result<Vec<_>, _>>()?;
        opt.retain(net);
        outcome.log.rounds.push(RoundLog { round, layers });
    }
    run_epochs(net, &mut opt, plan.compact_epochs, &mut outcome.history)?;
    if total > 0 {
        net.tau = temperature(total, total, &net.config)?;
    }
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranking_breaks_ties_by_catalog() {
        let mut r = vec![
            (AggOpKind::Sgc, 0.2),
            (AggOpKind::Gcn, 0.2),
            (AggOpKind::Sage, 0.6),
        ];
        rank(&mut r);
        assert_eq!(
            r.iter().map(|e| e.0).collect::<Vec<_>>(),
            vec![AggOpKind::Sage, AggOpKind::Gcn, AggOpKind::Sgc]
        );
        assert_eq!(replay_drop(&r, 1), vec![AggOpKind::Sgc]);
        assert!(replay_drop(&r, 0).is_empty());
    }

    #[test]
    fn plan_arithmetic() {
        let p = ShrinkPlan::default();
        assert_eq!(p.final_candidates(18), Some(9));
        assert_eq!(p.total_epochs(), 1600);
        let too_many = ShrinkPlan {
            rounds: 6,
            ..p
        };
        assert_eq!(too_many.final_candidates(18), None);
    }
}
