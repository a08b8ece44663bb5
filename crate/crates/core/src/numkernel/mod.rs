//! Dense numeric primitives: a small fully connected classifier stored as a
//! flat parameter vector, its softmax cross-entropy loss, analytic
//! gradients, plain SGD steps and a central-difference gradient oracle.

mod finite_diff;
mod model;
mod ops;
mod shard;

pub use finite_diff::{central_difference, finite_diff_gradient};
pub use model::{Activation, LayerShape, ModelParams, ModelSpec};
pub use ops::{accuracy, forward_loss, gradient, logits, sgd_step};
pub(crate) use ops::correct_count as ops_correct;
pub use shard::DatasetShard;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumError {
    #[error("invalid model spec: {0}")]
    InvalidSpec(String),
    #[error("dimension mismatch: model expects input dim {expected}, shard has {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("label {label} at row {row} is outside [0, {num_classes})")]
    LabelOutOfRange {
        row: usize,
        label: usize,
        num_classes: usize,
    },
    #[error("length mismatch: expected {expected} values, got {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("invalid shard: {0}")]
    InvalidShard(String),
    #[error("non-finite value produced at index {0}")]
    NonFinite(usize),
}
