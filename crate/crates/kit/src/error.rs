use grasp_core::augment::AugmentError;
use grasp_core::dataset::DatasetError;
use grasp_core::flops::FlopsError;
use grasp_core::fusion::FusionError;
use grasp_core::grasp::GraspError;
use grasp_core::head::HeadError;
use grasp_core::metrics::MetricError;
use grasp_core::pareto::ParetoError;

use crate::checkpoint::CheckpointError;
use crate::config::ConfigError;
use crate::gfea::GfeaError;
use crate::pnm::PnmError;
use crate::tables::TableError;

/// Any failure of a CLI command. The message leads with the module the error
/// came from.
#[derive(Debug, thiserror::Error)]
pub enum KitError {
    #[error("grasp: {0}")]
    Grasp(#[from] GraspError),
    #[error("metrics: {0}")]
    Metric(#[from] MetricError),
    #[error("flops: {0}")]
    Flops(#[from] FlopsError),
    #[error("pareto: {0}")]
    Pareto(#[from] ParetoError),
    #[error("head: {0}")]
    Head(#[from] HeadError),
    #[error("augment: {0}")]
    Augment(#[from] AugmentError),
    #[error("fusion: {0}")]
    Fusion(#[from] FusionError),
    #[error("dataset: {0}")]
    Dataset(#[from] DatasetError),
    #[error("gfea: {0}")]
    Gfea(#[from] GfeaError),
    #[error("checkpoint: {0}")]
    Checkpoint(#[from] CheckpointError),
    #[error("csv: {0}")]
    Table(#[from] TableError),
    #[error("image: {0}")]
    Image(#[from] PnmError),
    #[error("config: {0}")]
    Config(#[from] ConfigError),
    #[error("spec: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{context}: {source}")]
    Io { context: String, source: std::io::Error },
    #[error("{0}")]
    Usage(String),
}

impl KitError {
    pub fn io(context: impl std::fmt::Display, source: std::io::Error) -> Self {
        Self::Io { context: context.to_string(), source }
    }
}
