use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{NumError, Param, ParamId, Tensor};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum OptimizerKind {
    Adam,
    Adagrad,
}

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;
const ADAGRAD_EPS: f64 = 1e-10;

struct Moments {
    first: Tensor,
    second: Tensor,
}

/// Adam or Adagrad over a set of parameters. Weight decay is added to the
/// gradient as `weight_decay * param` before the update.
pub struct Optimizer {
    kind: OptimizerKind,
    lr: f64,
    weight_decay: f64,
    step: u64,
    state: HashMap<ParamId, Moments>,
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, lr: f64, weight_decay: f64) -> Self {
        Optimizer {
            kind,
            lr,
            weight_decay,
            step: 0,
            state: HashMap::new(),
        }
    }

    pub fn kind(&self) -> OptimizerKind {
        self.kind
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    pub fn lr(&self) -> f64 {
        self.lr
    }

    /// Applies one update to every parameter using its accumulated `grad`.
    pub fn step<'a>(&mut self, params: impl IntoIterator<Item = &'a mut Param>) -> Result<(), NumError> {
        self.step += 1;
        let t = self.step as i32;
        for p in params {
            if p.grad.shape() != p.value.shape() {
                return Err(NumError::ShapeMismatch {
                    op: "optimizer_step",
                    left: p.value.shape(),
                    right: p.grad.shape(),
                });
            }
            let (rows, cols) = p.value.shape();
            let m = self.state.entry(p.id()).or_insert_with(|| Moments {
                first: Tensor::zeros(rows, cols),
                second: Tensor::zeros(rows, cols),
            });
            if m.first.shape() != (rows, cols) {
                return Err(NumError::ShapeMismatch {
                    op: "optimizer_step",
                    left: (rows, cols),
                    right: m.first.shape(),
                });
            }
            let value = p.value.data_mut();
            let grad = p.grad.data();
            match self.kind {
                OptimizerKind::Adam => {
                    let bc1 = 1.0 - BETA1.powi(t);
                    let bc2 = 1.0 - BETA2.powi(t);
                    let (m1, m2) = (m.first.data_mut(), m.second.data_mut());
                    for k in 0..value.len() {
                        let g = grad[k] + self.weight_decay * value[k];
                        m1[k] = BETA1 * m1[k] + (1.0 - BETA1) * g;
                        m2[k] = BETA2 * m2[k] + (1.0 - BETA2) * g * g;
                        let mhat = m1[k] / bc1;
                        let vhat = m2[k] / bc2;
                        value[k] -= self.lr * mhat / (vhat.sqrt() + ADAM_EPS);
                    }
                }
                OptimizerKind::Adagrad => {
                    let acc = m.second.data_mut();
                    for k in 0..value.len() {
                        let g = grad[k] + self.weight_decay * value[k];
                        acc[k] += g * g;
                        value[k] -= self.lr * g / (acc[k].sqrt() + ADAGRAD_EPS);
                    }
                }
            }
        }
        Ok(())
    }

    /// Forgets state for parameters that no longer exist.
    pub fn retain(&mut self, live: &[ParamId]) {
        self.state.retain(|id, _| live.contains(id));
    }
}
