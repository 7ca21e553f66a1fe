use serde::{Deserialize, Serialize};

use super::{Hyperparams, TrainConfig};
use crate::numkit::{Activation, Optimizer, Param, SeededRng, Tape, Var};
use crate::opspace::OpHyper;
use crate::supernet::{accuracy, Genotype, GraphContext, Linear, Mode, SearchConfig, SplitRows, Supernet, SupernetError};

/// A trainable full-batch node classifier.
pub trait NodeClassifier {
    fn forward(&self, tape: &mut Tape, ctx: &GraphContext, train: bool) -> Result<Var, SupernetError>;
    fn params_mut(&mut self) -> Vec<&mut Param>;
}

impl NodeClassifier for Supernet {
    fn forward(&self, tape: &mut Tape, ctx: &GraphContext, train: bool) -> Result<Var, SupernetError> {
        let mut rng = SeededRng::new(self.config.seed, "unused");
        Supernet::forward(self, tape, ctx, Mode::Expectation, train, &mut rng)
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        self.weight_params_mut()
    }
}

/// Input projection, activation, dropout and classifier: no propagation.
pub struct MlpModel {
    pub input: Linear,
    pub classifier: Linear,
    pub activation: Activation,
    pub dropout: f64,
}

impl MlpModel {
    pub fn new(in_dim: usize, classes: usize, hp: &Hyperparams, seed: u64) -> Self {
        MlpModel {
            input: Linear::new(in_dim, hp.hidden, &mut SeededRng::new(seed, "init/input")),
            classifier: Linear::new(hp.hidden, classes, &mut SeededRng::new(seed, "init/classifier")),
            activation: hp.activation,
            dropout: hp.dropout,
        }
    }
}

impl NodeClassifier for MlpModel {
    fn forward(&self, tape: &mut Tape, ctx: &GraphContext, train: bool) -> Result<Var, SupernetError> {
        let x = tape.constant_shared(ctx.features.clone());
        let h = self.input.forward(tape, x)?;
        let h = tape.activate(h, self.activation)?;
        let h = tape.dropout(h, self.dropout, train)?;
        self.classifier.forward(tape, h)
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        let mut out: Vec<&mut Param> = self.input.params_mut().into_iter().collect();
        out.extend(self.classifier.params_mut());
        out
    }
}

/// What to train from scratch.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelSpec {
    Genotype(Genotype),
    Mlp,
}

impl ModelSpec {
    pub fn describe(&self) -> String {
        match self {
            ModelSpec::Genotype(g) => g.to_string(),
            ModelSpec::Mlp => "mlp".to_string(),
        }
    }

    /// Hops the model reads.
    pub fn hops(&self) -> usize {
        match self {
            ModelSpec::Genotype(g) => g.layers.len(),
            ModelSpec::Mlp => 1,
        }
    }

    pub fn build(
        &self,
        in_dim: usize,
        classes: usize,
        hp: &Hyperparams,
        hyper: &OpHyper,
        seed: u64,
    ) -> Result<Box<dyn NodeClassifier>, SupernetError> {
        Ok(match self {
            ModelSpec::Genotype(g) => {
                let cfg = SearchConfig {
                    layers: g.layers.len(),
                    hidden: hp.hidden,
                    dropout: hp.dropout,
                    activation: hp.activation,
                    hyper: *hyper,
                    seed,
                    ..SearchConfig::default()
                };
                Box::new(Supernet::from_genotype(g, in_dim, classes, &cfg)?)
            }
            ModelSpec::Mlp => Box::new(MlpModel::new(in_dim, classes, hp, seed)),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainOutcome {
    pub best_epoch: usize,
    pub epochs_run: usize,
    pub train_acc: f64,
    pub val_acc: f64,
    /// Test accuracy at the best-validation epoch.
    pub test_acc: f64,
    pub diverged: bool,
}

/// Full-batch training with early stopping on validation accuracy; ties keep
/// the earlier epoch. A non-finite loss stops training and marks the outcome
/// as diverged.
pub fn train_model(
    model: &mut dyn NodeClassifier,
    ctx: &GraphContext,
    rows: &SplitRows,
    hp: &Hyperparams,
    stop: &TrainConfig,
    seed: u64,
) -> Result<TrainOutcome, SupernetError> {
    let mut opt = Optimizer::new(hp.optimizer, hp.lr, hp.weight_decay);
    let mut best = TrainOutcome {
        best_epoch: 0,
        epochs_run: 0,
        train_acc: 0.0,
        val_acc: f64::NEG_INFINITY,
        test_acc: 0.0,
        diverged: false,
    };
    for epoch in 0..stop.max_epochs {
        let mut tape = Tape::with_rng(SeededRng::new(seed, format!("train/epoch={epoch}")));
        let logits = model.forward(&mut tape, ctx, true)?;
        let loss = tape.cross_entropy(logits, &ctx.labels, &rows.train)?;
        if !tape.value(loss).item().is_finite() {
            best.diverged = true;
            best.epochs_run = epoch + 1;
            break;
        }
        let grads = match tape.backward(loss) {
            Ok(g) => g,
            Err(crate::numkit::NumError::NonFinite { .. }) => {
                best.diverged = true;
                best.epochs_run = epoch + 1;
                break;
            }
            Err(e) => return Err(e.into()),
        };
        let mut params = model.params_mut();
        for p in params.iter_mut() {
            p.zero_grad();
        }
        grads.accumulate(params.iter_mut().map(|p| &mut **p));
        opt.step(params)?;

        let mut eval_tape = Tape::new(seed);
        let out = model.forward(&mut eval_tape, ctx, false)?;
        let logits = eval_tape.value(out);
        best.epochs_run = epoch + 1;
        if !logits.is_finite() {
            best.diverged = true;
            break;
        }
        let val = accuracy(logits, &ctx.labels, &rows.val);
        if val > best.val_acc {
            best.val_acc = val;
            best.best_epoch = epoch;
            best.train_acc = accuracy(logits, &ctx.labels, &rows.train);
            best.test_acc = accuracy(logits, &ctx.labels, &rows.test);
        } else if epoch - best.best_epoch >= stop.patience {
            break;
        }
    }
    if best.val_acc == f64::NEG_INFINITY {
        best.val_acc = 0.0;
    }
    Ok(best)
}
