//! Graph data model, k-hop neighbor sets, homophily and heterophily
//! measurement, dataset files, splits and a stochastic block model.

mod graph;
mod homophily;
mod io;
mod khop;
mod sbm;
mod splits;

pub use graph::{Graph, Split, SplitSet};
pub use homophily::{d_hete, heterophily_matrix, node_homophily, one_hot, predictions_one_hot, HeterophilyMatrix};
pub use io::{load_dataset, write_dataset, DatasetMeta};
pub use khop::{khop_adjacency, sym_norm, KHopSet};
pub use sbm::{expected_sbm_homophily, sbm_generate, FeatureSpec};
pub use splits::{generate_splits, SplitRatios};

use thiserror::Error;

use crate::numkit::NumError;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("missing file {0}")]
    MissingFile(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error in {file} line {line}: {msg}")]
    Parse { file: String, line: usize, msg: String },
    #[error("node index {index} out of range for {n} nodes")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error("split masks overlap at node {0}")]
    SplitOverlap(usize),
    #[error("{what}: expected {expected}, found {found}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("hop order must be >= 1, got {0}")]
    InvalidHop(usize),
    #[error("every node is isolated; homophily undefined")]
    AllIsolated,
    #[error("class {class} has {size} nodes, need at least {min}")]
    ClassTooSmall { class: usize, size: usize, min: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Num(#[from] NumError),
}
