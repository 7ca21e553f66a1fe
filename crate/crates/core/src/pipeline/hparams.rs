use serde::{Deserialize, Serialize};

use crate::numkit::{Activation, OptimizerKind, SeededRng};

/// Training hyperparameters of a fixed architecture.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Hyperparams {
    pub hidden: usize,
    pub lr: f64,
    pub weight_decay: f64,
    pub optimizer: OptimizerKind,
    pub dropout: f64,
    pub activation: Activation,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            hidden: 64,
            lr: 5e-3,
            weight_decay: 5e-4,
            optimizer: OptimizerKind::Adam,
            dropout: 0.5,
            activation: Activation::Elu,
        }
    }
}

/// The tuning grid; every coordinate is drawn independently and uniformly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HyperparamSpace {
    pub hidden: Vec<usize>,
    pub lr: (f64, f64),
    pub weight_decay: (f64, f64),
    pub optimizer: Vec<OptimizerKind>,
    pub dropout: Vec<f64>,
    pub activation: Vec<Activation>,
}

impl Default for HyperparamSpace {
    fn default() -> Self {
        HyperparamSpace {
            hidden: vec![16, 32, 64, 128, 256],
            lr: (1e-3, 1e-2),
            weight_decay: (1e-5, 1e-3),
            optimizer: vec![OptimizerKind::Adagrad, OptimizerKind::Adam],
            dropout: vec![0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6],
            activation: vec![Activation::Elu, Activation::Relu, Activation::LeakyRelu],
        }
    }
}

impl HyperparamSpace {
    pub fn sample(&self, rng: &mut SeededRng) -> Hyperparams {
        Hyperparams {
            hidden: self.hidden[rng.index(self.hidden.len())],
            lr: rng.uniform_range(self.lr.0, self.lr.1),
            weight_decay: rng.uniform_range(self.weight_decay.0, self.weight_decay.1),
            optimizer: self.optimizer[rng.index(self.optimizer.len())],
            dropout: self.dropout[rng.index(self.dropout.len())],
            activation: self.activation[rng.index(self.activation.len())],
        }
    }

    pub fn contains(&self, hp: &Hyperparams) -> bool {
        self.hidden.contains(&hp.hidden)
            && (self.lr.0..=self.lr.1).contains(&hp.lr)
            && (self.weight_decay.0..=self.weight_decay.1).contains(&hp.weight_decay)
            && self.optimizer.contains(&hp.optimizer)
            && self.dropout.contains(&hp.dropout)
            && self.activation.contains(&hp.activation)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn samples_stay_in_the_grid() {
        let space = HyperparamSpace::default();
        let mut rng = SeededRng::new(0, "hp");
        let mut hidden_seen = std::collections::BTreeSet::new();
        for _ in 0..500 {
            let hp = space.sample(&mut rng);
            assert!(space.contains(&hp));
            hidden_seen.insert(hp.hidden);
        }
        assert_eq!(hidden_seen.len(), 5);
    }
}
