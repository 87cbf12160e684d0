//! Context/target sampling, latent objectives, pretraining and the
//! collapse diagnostics.

mod collapse;
mod embed;
mod objective;
mod sampling;
mod train;

pub use collapse::{
    collapse_experiment, collapse_metrics, effective_rank, ols_solve, CollapseConfig, CollapseMetrics, CollapseReport,
    CollapseRun, OlsSolution,
};
pub use embed::{embed_dataset, embed_prepared, Embeddings};
pub use objective::{
    alt_loss_euclidean, alt_loss_poincare, hyperbolic_target, hyperbolic_target_var, jepa_loss, HyperbolicTarget,
    LossKind, PoincareLoss, POINCARE_MAX_NORM,
};
pub use sampling::{sample_batch, sample_indices, ContextTargetBatch};
pub use train::{
    prepare_dataset, prepare_graph, tau_at, train, train_observed, PreparedGraph, TargetMode, TrainConfig, TrainLogRow,
    TrainOutput,
};
