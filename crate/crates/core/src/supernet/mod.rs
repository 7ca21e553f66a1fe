//! One-shot supernet: input projection, `L` mixed aggregation layers (layer
//! `l` reads the `l`-hop neighbor matrix), gated layer outputs, a mixed fuser
//! and a classifier, trained by alternating weight and architecture steps.

mod context;
mod edge;
mod genotype;
mod net;
mod train;

pub use context::{accuracy, GraphContext, SplitRows};
pub use edge::{Candidate, EdgeId, MixedEdge, Mode};
pub use genotype::Genotype;
pub use net::{Linear, Supernet};
pub use train::{bilevel_epoch, weight_step, SearchOptimizers};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graphcore::GraphError;
use crate::numkit::{Activation, NumError};
use crate::opspace::{OpError, OpHyper};

#[derive(Debug, Error)]
pub enum SupernetError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("temperature schedule needs total_epochs > 0")]
    EmptySchedule,
    #[error("epoch {epoch} beyond schedule of {total}")]
    EpochOutOfRange { epoch: usize, total: usize },
    #[error("every candidate on {0} is masked")]
    AllMasked(EdgeId),
    #[error("{kind} is not an active candidate on {edge}")]
    NotActive { edge: EdgeId, kind: String },
    #[error("cannot empty an edge: {edge} has {active} candidates, asked to drop {requested}")]
    CannotEmpty {
        edge: EdgeId,
        active: usize,
        requested: usize,
    },
    #[error("genotype does not fit the supernet: {0}")]
    GenotypeMismatch(String),
    #[error("non-finite {phase} loss at epoch {epoch}")]
    NonFiniteLoss { phase: &'static str, epoch: usize },
    #[error(transparent)]
    Op(#[from] OpError),
    #[error(transparent)]
    Num(#[from] NumError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchConfig {
    pub layers: usize,
    pub hidden: usize,
    pub tau_max: f64,
    pub tau_min: f64,
    pub lr_w: f64,
    pub lr_alpha: f64,
    pub wd_w: f64,
    pub wd_alpha: f64,
    pub dropout: f64,
    pub activation: Activation,
    pub hyper: OpHyper,
    pub seed: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            layers: 3,
            hidden: 64,
            tau_max: 8.0,
            tau_min: 4.0,
            lr_w: 5e-3,
            lr_alpha: 3e-3,
            wd_w: 5e-4,
            wd_alpha: 1e-3,
            dropout: 0.5,
            activation: Activation::Elu,
            hyper: OpHyper::default(),
            seed: 0,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<(), SupernetError> {
        let bad = |m: String| Err(SupernetError::InvalidConfig(m));
        if self.layers == 0 {
            return bad("layers must be >= 1".into());
        }
        if self.hidden == 0 {
            return bad("hidden width must be >= 1".into());
        }
        if !(self.tau_min > 0.0 && self.tau_max >= self.tau_min) {
            return bad(format!(
                "need tau_max >= tau_min > 0, got {} / {}",
                self.tau_max, self.tau_min
            ));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad(format!("dropout {} outside [0, 1)", self.dropout));
        }
        for (name, v) in [
            ("lr_w", self.lr_w),
            ("lr_alpha", self.lr_alpha),
            ("wd_w", self.wd_w),
            ("wd_alpha", self.wd_alpha),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name} must be a finite non-negative number, got {v}"));
            }
        }
        Ok(())
    }
}

/// Linear decay from `tau_max` at epoch 0 to `tau_min` at `total_epochs`.
pub fn temperature(epoch: usize, total_epochs: usize, config: &SearchConfig) -> Result<f64, SupernetError> {
    if total_epochs == 0 {
        return Err(SupernetError::EmptySchedule);
    }
    if epoch > total_epochs {
        return Err(SupernetError::EpochOutOfRange {
            epoch,
            total: total_epochs,
        });
    }
    let frac = epoch as f64 / total_epochs as f64;
    Ok(config.tau_max - (config.tau_max - config.tau_min) * frac)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn temperature_schedule_endpoints() {
        let c = SearchConfig::default();
        assert_eq!(temperature(0, 100, &c).unwrap(), 8.0);
        assert_eq!(temperature(50, 100, &c).unwrap(), 6.0);
        assert_eq!(temperature(100, 100, &c).unwrap(), 4.0);
        assert!(matches!(temperature(0, 0, &c), Err(SupernetError::EmptySchedule)));
        assert!(temperature(101, 100, &c).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(SearchConfig::default().validate().is_ok());
        let c = SearchConfig {
            layers: 0,
            ..SearchConfig::default()
        };
        assert!(c.validate().is_err());
        let c = SearchConfig {
            tau_min: 9.0,
            ..SearchConfig::default()
        };
        assert!(c.validate().is_err());
    }
}
