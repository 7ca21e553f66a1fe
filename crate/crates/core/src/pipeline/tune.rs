use serde::{Deserialize, Serialize};

use super::{HyperparamSpace, Hyperparams, ModelSpec, PipelineError, TrainConfig};
use crate::graphcore::Split;
use crate::numkit::SeededRng;
use crate::opspace::OpHyper;
use super::derive_seed;
use crate::supernet::{GraphContext, SplitRows};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub index: usize,
    pub hyperparams: Hyperparams,
    pub val_acc: f64,
    pub test_acc: f64,
    pub diverged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TuneResult {
    pub best: Hyperparams,
    pub best_trial: Option<usize>,
    pub trials: Vec<Trial>,
}

/// Random search: `iters` independent draws from `space`, each trained on
/// `split` and scored by validation accuracy. The best trial wins, ties go to
/// the earlier one; no trials returns the default hyperparameters.
#[allow(clippy::too_many_arguments)]
pub fn tune(
    spec: &ModelSpec,
    ctx: &GraphContext,
    split: &Split,
    space: &HyperparamSpace,
    iters: usize,
    stop: &TrainConfig,
    hyper: &OpHyper,
    seed: u64,
) -> Result<TuneResult, PipelineError> {
    let rows = SplitRows::new(split);
    let mut rng = SeededRng::new(seed, "tune/sample");
    let mut trials = Vec::with_capacity(iters);
    for index in 0..iters {
        let hp = space.sample(&mut rng);
        let model_seed = derive_seed(seed, &format!("tune/trial={index}"));
        let mut model = spec.build(ctx.feature_dim(), ctx.num_classes, &hp, hyper, model_seed)?;
        let out = super::train_model(model.as_mut(), ctx, &rows, &hp, stop, model_seed)?;
        trials.push(Trial {
            index,
            hyperparams: hp,
            val_acc: out.val_acc,
            test_acc: out.test_acc,
            diverged: out.diverged,
        });
    }
    let mut best_trial: Option<usize> = None;
    for t in trials.iter().filter(|t| !t.diverged) {
        if best_trial.is_none_or(|b| t.val_acc > trials[b].val_acc) {
            best_trial = Some(t.index);
        }
    }
    Ok(TuneResult {
        best: best_trial.map_or_else(Hyperparams::default, |b| trials[b].hyperparams),
        best_trial,
        trials,
    })
}
