//! GIN encoder, projection/prediction heads, and exact gradients.

pub mod backward;
pub mod checkpoint;
pub mod forward;
pub mod model;
pub mod tensor;

pub use backward::{
    encode_backward, mlp_backward, readout_fragments_backward, readout_graph_backward,
};
pub use checkpoint::CheckpointError;
pub use forward::{
    encode, mlp_rows, predict, project, project_fragments, readout_fragments, readout_graph,
    EncodeTrace, MlpTrace,
};
pub use model::{Affine, GinModel, Mlp, ModelConfig};
pub use tensor::{Scalar, Tensor};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NnError {
    #[error("feature code {code} out of vocabulary for {feature} (size {vocab})")]
    CodeOutOfVocab {
        feature: &'static str,
        code: u16,
        vocab: u16,
    },
    #[error("graph featurized with {graph} but model expects {model}")]
    FeatureSetMismatch {
        model: &'static str,
        graph: &'static str,
    },
    #[error("fragment map covers {assigned} atoms but graph has {atoms}")]
    PartitionMismatch { atoms: usize, assigned: usize },
    #[error("trace does not match this forward pass (expected {expected} values, got {got})")]
    TraceMismatch { expected: usize, got: usize },
    #[error("model has no prediction head")]
    MissingPredictionHead,
}
