use serde::{Deserialize, Serialize};

use super::embed::embed_prepared;
use super::train::{mean_column_std, prepare_dataset, train_observed, PreparedGraph, TargetMode, TrainConfig};
use crate::autodiff::Tensor;
use crate::error::{Error, Result};
use crate::graph::toy_dataset;
use crate::linalg::{cholesky, cholesky_solve, gram, singular_values, xty};
use crate::nn::JepaModel;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CollapseMetrics {
    /// Per-dimension std of graph embeddings, averaged over dimensions.
    pub embedding_std: f64,
    /// Std of patch angles over all patches.
    pub psi_std: f64,
    pub effective_rank: f64,
}

pub fn collapse_metrics(model: &JepaModel, prepared: &[PreparedGraph]) -> Result<CollapseMetrics> {
    let emb = embed_prepared(model, prepared)?;
    let n = emb.patch_alphas.len().max(1) as f64;
    let mean = emb.patch_alphas.iter().sum::<f64>() / n;
    let var = emb.patch_alphas.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n;
    Ok(CollapseMetrics {
        embedding_std: mean_column_std(&emb.graph),
        psi_std: var.sqrt(),
        effective_rank: effective_rank(&emb.graph),
    })
}

/// `exp` of the entropy of the normalized singular values. Values below
/// `1e-10 * max` count as zero; the zero matrix has rank 0.
pub fn effective_rank(x: &Tensor) -> f64 {
    let sv = singular_values(x);
    let top = sv.first().copied().unwrap_or(0.0);
    if top <= 0.0 {
        return 0.0;
    }
    let kept: Vec<f64> = sv.into_iter().filter(|&s| s > 1e-10 * top).collect();
    let total: f64 = kept.iter().sum();
    let entropy: f64 = kept
        .iter()
        .map(|&s| {
            let q = s / total;
            -q * q.ln()
        })
        .sum();
    entropy.exp()
}

#[derive(Clone, Debug)]
pub struct OlsSolution {
    pub w: Tensor,
    /// `‖XW − Y‖²`, the squared norm of `Y` outside the column space of `X`.
    pub residual: f64,
    /// True when `XᵀX` was singular and a `1e-8` ridge was added.
    pub regularized: bool,
}

/// Least-squares weights `W = (XᵀX)⁻¹XᵀY`.
pub fn ols_solve(x: &Tensor, y: &Tensor) -> Result<OlsSolution> {
    let xtx = gram(x);
    let xy = xty(x, y)?;
    let (l, regularized) = match cholesky(&xtx) {
        Some(l) => (l, false),
        None => {
            let mut reg = xtx.clone();
            for i in 0..reg.rows() {
                reg.set(i, i, reg.get(i, i) + 1e-8);
            }
            let l = cholesky(&reg).ok_or_else(|| Error::InvalidArgument("design matrix is not usable".into()))?;
            (l, true)
        }
    };
    let w = cholesky_solve(&l, &xy);
    let fit = x.matmul(&w)?;
    let residual = fit.data().iter().zip(y.data()).map(|(a, b)| (a - b).powi(2)).sum();
    Ok(OlsSolution { w, residual, regularized })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CollapseConfig {
    pub graphs: usize,
    pub steps: usize,
    pub seeds: Vec<u64>,
    /// Metrics are recorded at step 0 and every `record_every` steps.
    pub record_every: usize,
    pub train: TrainConfig,
}

impl Default for CollapseConfig {
    fn default() -> Self {
        Self {
            graphs: 50,
            steps: 200,
            seeds: (0..5).collect(),
            record_every: 20,
            train: TrainConfig {
                batch_graphs: 50,
                p: 6,
                m: 2,
                k: 8,
                d: 32,
                blocks: 2,
                ..TrainConfig::default()
            },
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CollapseRun {
    pub seed: u64,
    /// `(step, metrics)` for the moving-average run.
    pub ema: Vec<(usize, CollapseMetrics)>,
    /// `(step, metrics)` for the shared-weights run.
    pub shared: Vec<(usize, CollapseMetrics)>,
}

impl CollapseRun {
    pub fn ema_final(&self) -> CollapseMetrics {
        self.ema.last().expect("recorded").1
    }

    pub fn shared_final(&self) -> CollapseMetrics {
        self.shared.last().expect("recorded").1
    }

    pub fn shared_monotone(&self) -> bool {
        self.shared.windows(2).all(|w| w[1].1.embedding_std <= w[0].1.embedding_std)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CollapseReport {
    pub config: CollapseConfig,
    pub runs: Vec<CollapseRun>,
}

impl CollapseReport {
    /// Seeds whose moving-average run ends with `embedding_std >= floor`.
    pub fn ema_alive(&self, floor: f64) -> usize {
        self.runs.iter().filter(|r| r.ema_final().embedding_std >= floor).count()
    }

    /// Seeds whose shared run ends below the moving-average run.
    pub fn shared_below_ema(&self) -> usize {
        self.runs
            .iter()
            .filter(|r| r.shared_final().embedding_std < r.ema_final().embedding_std)
            .count()
    }

    pub fn shared_monotone(&self) -> usize {
        self.runs.iter().filter(|r| r.shared_monotone()).count()
    }
}

/// Full-batch training on a toy set with and without the moving-average
/// target branch, one pair of runs per seed.
pub fn collapse_experiment(cfg: &CollapseConfig) -> Result<CollapseReport> {
    if cfg.record_every == 0 || cfg.steps == 0 {
        return Err(Error::InvalidArgument("steps and record_every must be positive".into()));
    }
    let mut runs = Vec::with_capacity(cfg.seeds.len());
    for &seed in &cfg.seeds {
        let ds = toy_dataset(cfg.graphs, seed);
        let base = TrainConfig {
            epochs: cfg.steps,
            batch_graphs: cfg.graphs,
            seed,
            ..cfg.train.clone()
        };
        let prepared = prepare_dataset(&ds, &base)?;
        let trajectory = |mode: TargetMode| -> Result<Vec<(usize, CollapseMetrics)>> {
            let run_cfg = TrainConfig { target_mode: mode, ..base.clone() };
            let fresh = JepaModel::new(run_cfg.model_config(ds.node_feature_dim(), ds.edge_feature_dim()), seed)?;
            let mut out = vec![(0, collapse_metrics(&fresh, &prepared)?)];
            let mut failure = None;
            train_observed(&ds, &run_cfg, |row, model| {
                let step = (row.epoch + 1) * row.steps;
                if failure.is_none() && (step % cfg.record_every == 0 || row.epoch + 1 == cfg.steps) {
                    match collapse_metrics(model, &prepared) {
                        Ok(m) => out.push((step, m)),
                        Err(e) => failure = Some(e),
                    }
                }
            })?;
            failure.map_or(Ok(out), Err)
        };
        let ema = trajectory(TargetMode::Ema)?;
        let shared = trajectory(TargetMode::Shared)?;
        runs.push(CollapseRun { seed, ema, shared });
    }
    Ok(CollapseReport {
        config: cfg.clone(),
        runs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn effective_rank_edge_cases() {
        let same = Tensor::from_rows(&vec![vec![1.0, 2.0, 3.0]; 4]).unwrap();
        assert!((effective_rank(&same) - 1.0).abs() < 1e-9);
        assert!((effective_rank(&Tensor::identity(5)) - 5.0).abs() < 1e-9);
        assert_eq!(effective_rank(&Tensor::zeros(3, 3)), 0.0);
    }

    #[test]
    fn ols_identity_design() {
        let y = Tensor::new(3, 2, vec![1., 2., 3., 4., 5., 6.]).unwrap();
        let sol = ols_solve(&Tensor::identity(3), &y).unwrap();
        assert!(!sol.regularized);
        assert!(sol.residual < 1e-20);
        for (a, b) in sol.w.data().iter().zip(y.data()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn ols_singular_design_is_flagged() {
        let x = Tensor::new(3, 2, vec![1., 1., 2., 2., 3., 3.]).unwrap();
        let y = Tensor::new(3, 1, vec![1., 2., 3.]).unwrap();
        let sol = ols_solve(&x, &y).unwrap();
        assert!(sol.regularized);
        assert!(sol.residual < 1e-6);
    }

    #[test]
    fn fresh_model_is_not_collapsed() {
        let cfg = CollapseConfig::default();
        let ds = toy_dataset(8, 3);
        let prepared = prepare_dataset(&ds, &cfg.train).unwrap();
        let model = JepaModel::new(cfg.train.model_config(1, 1), 0).unwrap();
        let m = collapse_metrics(&model, &prepared).unwrap();
        assert!(m.embedding_std > 0.0 && m.psi_std > 0.0 && m.effective_rank > 1.0);
    }
}
