//! Two-layer graph convolutional network trained full-batch on one category.
//!
//! `hidden = ReLU(Â·H⁰·W¹ + b¹)`, `logits = Â·hidden·W² + b²`,
//! `probs = softmax(logits)` row-wise. The second layer emits class logits
//! directly; there is no separate classifier head and no ReLU on the output.
//! The loss is the summed cross-entropy over a node mask, so test nodes
//! shape the representation through `Â` but never contribute a target.

mod adam;
mod model;
mod task;
mod train;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use model::{argmax, backward, forward, loss, Forward, GcnDims, GcnModel, Gradients};
pub use task::TaskLabels;
pub use train::{predict, train, HistoryRow, TrainConfig, TrainHistory, Trainer};
