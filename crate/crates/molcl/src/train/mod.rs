//! Training: batching, optimization, pre-training and fine-tuning loops,
//! dataset splits, and evaluation metrics.

pub mod batch;
pub mod config;
pub mod dataset;
pub mod finetune;
pub mod metrics;
pub mod optim;
pub mod pretrain;
pub mod split;

pub use batch::{build_batch, build_cache, contrastive_step, BatchPlan, MolRecord, StepOutput};
pub use config::TrainConfig;
pub use dataset::{Dataset, TaskType};
pub use finetune::{finetune, ColumnReport, FinetuneReport};
pub use metrics::{mae, rmse, roc_auc, scaled_error, MetricError};
pub use optim::{adam_step, cosine_lr, AdamConfig, AdamState};
pub use pretrain::{corpus_cache, pretrain, EpochStats, PretrainOutput};
pub use split::{random_split, scaffold_split, SplitResult};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("line {line} ({smiles}): {error}")]
    Parse {
        line: usize,
        smiles: String,
        error: crate::chem::ParseError,
    },
    #[error("line {line}: {error}")]
    Featurize {
        line: usize,
        error: crate::chem::FeaturizeError,
    },
    #[error(transparent)]
    Fingerprint(crate::fingerprint::FingerprintError),
    #[error(transparent)]
    Augment(crate::augment::AugmentError),
    #[error(transparent)]
    Nn(crate::nn::NnError),
    #[error(transparent)]
    Loss(crate::loss::LossError),
    #[error(transparent)]
    Metric(MetricError),
    #[error(transparent)]
    Checkpoint(#[from] crate::nn::CheckpointError),
    #[error("dataset: {0}")]
    Dataset(String),
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("config: {0}")]
    Config(String),
    #[error("{0}")]
    Domain(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("non-finite gradient in tensor {tensor} at {index}")]
    NonFiniteGrad { tensor: usize, index: usize },
    #[error(
        "batch failed at epoch {epoch}, batch {batch} (batch seed {batch_seed:#018x}): {detail}"
    )]
    BatchFailed {
        epoch: usize,
        batch: usize,
        batch_seed: u64,
        detail: String,
    },
    #[error("task types: {0}")]
    TaskTypeMismatch(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}
