//! Minimal reverse-mode automatic differentiation and the Adam optimizer.

mod adam;
mod checkpoint;
mod graph;
mod params;
mod tensor;

pub use adam::{AdamConfig, AdamState};
pub use checkpoint::{ParamCheckpoint, ParamRecord, PARAM_FORMAT_VERSION};
pub use graph::{Gradients, Graph, NodeId};
pub use params::{ParamId, ParamSet};
pub use tensor::Tensor;
