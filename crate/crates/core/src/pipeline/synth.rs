use std::path::Path;

use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::graphcore::{generate_splits, sbm_generate, write_dataset, FeatureSpec, Graph, SplitRatios, SplitSet};
use crate::numkit::{SeededRng, Tensor};

/// Stochastic block model with equal class sizes, one intra-class and one
/// inter-class edge probability, and Gaussian class-conditional features.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub classes: usize,
    pub per_class: usize,
    pub p_intra: f64,
    pub p_inter: f64,
    pub feature_dim: usize,
    /// Standard deviation of the class means.
    pub mean_scale: f64,
    /// Per-node feature noise.
    pub sigma: f64,
    pub splits: usize,
    pub ratios: SplitRatios,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            classes: 3,
            per_class: 100,
            p_intra: 0.002,
            p_inter: 0.03,
            feature_dim: 16,
            mean_scale: 1.0,
            sigma: 3.0,
            splits: 10,
            ratios: SplitRatios::default(),
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        let ok = self.classes >= 1
            && self.per_class >= 3
            && (0.0..=1.0).contains(&self.p_intra)
            && (0.0..=1.0).contains(&self.p_inter)
            && self.feature_dim >= 1
            && self.sigma >= 0.0
            && self.mean_scale >= 0.0
            && self.splits >= 1;
        if ok {
            Ok(())
        } else {
            Err(PipelineError::Config(format!("invalid synthetic dataset parameters: {self:?}")))
        }
    }

    pub fn mixing(&self) -> Tensor {
        let mut b = Tensor::filled(self.classes, self.classes, self.p_inter);
        for i in 0..self.classes {
            b.set(i, i, self.p_intra);
        }
        b
    }

    pub fn generate(&self) -> Result<(Graph, SplitSet), PipelineError> {
        self.validate()?;
        let mut rng = SeededRng::new(self.seed, "sbm/means");
        let spec = FeatureSpec::random_means(self.classes, self.feature_dim, self.mean_scale, self.sigma, &mut rng);
        let mut graph = sbm_generate(&vec![self.per_class; self.classes], &self.mixing(), &spec, self.seed)?;
        graph.name = format!("sbm-{}x{}-seed{}", self.classes, self.per_class, self.seed);
        let splits = generate_splits(&graph, self.ratios, self.splits, self.seed)?;
        Ok((graph, splits))
    }
}

/// Generates the dataset and writes it to `out`.
pub fn synthesize(config: &SynthConfig, out: &Path) -> Result<(Graph, SplitSet), PipelineError> {
    let (graph, splits) = config.generate()?;
    write_dataset(&graph, &splits, out)?;
    Ok((graph, splits))
}
