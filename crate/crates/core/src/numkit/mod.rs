//! Dense/sparse numerics, reverse-mode autodiff, optimizers and seeded
//! random streams.

mod gradcheck;
mod optim;
mod rng;
mod sparse;
mod tape;
mod tensor;

pub use gradcheck::gradient_check;
pub use optim::{Optimizer, OptimizerKind};
pub use rng::{gumbel_sample, gumbel_transform, SeededRng};
pub use sparse::{EdgeIndex, SparseMatrix};
pub use tape::{sigmoid, Activation, Gradients, Param, ParamId, Tape, Var, LEAKY_SLOPE};
pub use tensor::{softmax_slice, Tensor};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumError {
    #[error("shape mismatch in {op}: {left:?} vs {right:?}")]
    ShapeMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("non-finite value produced by {op}")]
    NonFinite { op: &'static str },
    #[error("index {index:?} out of range for shape {shape:?}")]
    IndexOutOfRange {
        index: (usize, usize),
        shape: (usize, usize),
    },
    #[error("duplicate sparse entry ({0}, {1})")]
    DuplicateEntry(usize, usize),
    #[error("tensor is detached from this tape")]
    Detached,
    #[error("loss must be scalar, got shape {0:?}")]
    NotScalar((usize, usize)),
    #[error("empty input to {0}")]
    Empty(&'static str),
    #[error("{0}")]
    InvalidArgument(String),
}
