//! Linear evaluation of frozen graph embeddings.

mod cv;
mod linear;

pub use cv::{
    cross_validate_features, cross_validate_with, majority_baseline, shuffled_folds, stratified_folds, FeatureScope,
    FoldResult, ProbeConfig, ProbeReport, ProbeTargets, ProbeTask,
};
pub use linear::{class_probabilities, logreg_fit, ridge_fit, LinearModel, LogRegFit, LogRegOptions, Standardizer};

use crate::autodiff::Tensor;
use crate::error::{Error, Result};
use crate::graph::{GraphDataset, Task};
use crate::jepa::{embed_dataset, train, TrainConfig};
use crate::nn::JepaModel;

pub fn probe_targets(ds: &GraphDataset) -> Result<ProbeTargets> {
    match ds.task {
        Task::Classification { num_classes } => {
            if num_classes < 2 {
                return Err(Error::Schema(format!("dataset '{}' has fewer than two classes", ds.name)));
            }
            Ok(ProbeTargets::Classes {
                labels: ds.class_labels()?,
                num_classes,
            })
        }
        Task::Regression { .. } => Ok(ProbeTargets::Values(Tensor::from_rows(&ds.regression_targets()?)?)),
    }
}

/// Probes the embeddings of an already trained model.
pub fn cross_validate(ds: &GraphDataset, model: &JepaModel, train_cfg: &TrainConfig, cfg: &ProbeConfig) -> Result<ProbeReport> {
    let x = embed_dataset(ds, model, train_cfg)?.graph;
    cross_validate_features(&x, &probe_targets(ds)?, cfg)
}

/// Pretrains with seed `train_cfg.seed + run` for every run and probes the
/// resulting embeddings. With `per_fold`, pretraining sees only the
/// training split of each fold.
pub fn pretrain_and_probe(ds: &GraphDataset, train_cfg: &TrainConfig, cfg: &ProbeConfig, per_fold: bool) -> Result<ProbeReport> {
    let targets = probe_targets(ds)?;
    cross_validate_with(&targets, cfg, per_fold, |scope| {
        let (run, subset) = match scope {
            FeatureScope::Run(run) => (run, None),
            FeatureScope::Fold { run, train, .. } => (run, Some(train)),
        };
        let run_cfg = TrainConfig {
            seed: train_cfg.seed.wrapping_add(run as u64),
            ..train_cfg.clone()
        };
        let model = match subset {
            Some(idx) => train(&ds.subset(idx), &run_cfg)?.model,
            None => train(ds, &run_cfg)?.model,
        };
        Ok(embed_dataset(ds, &model, &run_cfg)?.graph)
    })
}

#[cfg(test)]
mod tests;
