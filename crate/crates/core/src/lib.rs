//! Heterophily-aware graph neural architecture search on CPU.
//!
//! - [`numkit`]: dense/sparse tensors, a reverse-mode tape, optimizers, seeded RNG streams.
//! - [`graphcore`]: graphs, k-hop neighbor sets, homophily statistics, SBM generation, dataset IO.
//! - [`opspace`]: the candidate aggregators, layer gates and fusers.
//! - [`supernet`]: the mixed-operation network and its training steps.
//! - [`shrinker`]: progressive candidate dropping down to a compact supernet.
//! - [`selector`]: edge-by-edge discretization under a selection criterion.
//! - [`pipeline`]: search, tuning, training, evaluation and reports, as driven by the `heg` binary.

pub mod graphcore;
pub mod numkit;
pub mod opspace;
pub mod pipeline;
pub mod selector;
pub mod shrinker;
pub mod supernet;
