use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::objective::{alt_loss_euclidean, alt_loss_poincare, hyperbolic_target_var, jepa_loss, hyperbolic_target, LossKind};
use super::sampling::{sample_indices, ContextTargetBatch};
use crate::autodiff::{smooth_l1, Adam, Tape, Tensor};
use crate::error::{Error, Result};
use crate::graph::{Graph, GraphDataset};
use crate::nn::{JepaModel, ModelConfig, PatchBatch, Weights};
use crate::partition::{expand_one_hop, partition, PartitionMethod, PatchSet};
use crate::posenc::{patch_pe, rwse_nodes, PeKind};

/// How the target branch is produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetMode {
    /// Moving-average weights, no gradient through targets.
    Ema,
    /// Online weights, gradients flow through both branches.
    Shared,
}

impl std::str::FromStr for TargetMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ema" => Ok(Self::Ema),
            "shared" => Ok(Self::Shared),
            other => Err(Error::InvalidArgument(format!("unknown target mode '{other}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub lr: f64,
    pub batch_graphs: usize,
    /// Requested patch count; clamped to the node count of small graphs.
    pub p: usize,
    /// Targets per context.
    pub m: usize,
    /// Random-walk order.
    pub k: usize,
    pub d: usize,
    pub blocks: usize,
    pub gnn_layers: usize,
    pub beta: f64,
    pub ema_tau_start: f64,
    pub ema_tau_end: f64,
    pub loss_kind: LossKind,
    pub partition_method: PartitionMethod,
    pub pe_kind: PeKind,
    pub target_mode: TargetMode,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 100,
            lr: 5e-4,
            batch_graphs: 32,
            p: 32,
            m: 3,
            k: 15,
            d: 128,
            blocks: 4,
            gnn_layers: 2,
            beta: 1.0,
            ema_tau_start: 0.996,
            ema_tau_end: 1.0,
            loss_kind: LossKind::Hyperbola,
            partition_method: PartitionMethod::Multilevel,
            pe_kind: PeKind::NodeMax,
            target_mode: TargetMode::Ema,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if self.m == 0 || self.m + 1 > self.p {
            return bad(format!("need 1 <= m <= p - 1, got m={} p={}", self.m, self.p));
        }
        if !(self.beta > 0.0) {
            return bad(format!("beta must be > 0, got {}", self.beta));
        }
        for (name, tau) in [("ema_tau_start", self.ema_tau_start), ("ema_tau_end", self.ema_tau_end)] {
            if !(0.0..=1.0).contains(&tau) {
                return bad(format!("{name} must lie in [0, 1], got {tau}"));
            }
        }
        if !(self.lr >= 0.0) {
            return bad(format!("lr must be >= 0, got {}", self.lr));
        }
        for (name, v) in [("epochs", self.epochs), ("batch_graphs", self.batch_graphs), ("k", self.k), ("d", self.d), ("gnn_layers", self.gnn_layers)] {
            if v == 0 {
                return bad(format!("{name} must be positive"));
            }
        }
        Ok(())
    }

    pub fn model_config(&self, node_dim: usize, edge_dim: usize) -> ModelConfig {
        let mut mc = ModelConfig::new(node_dim, edge_dim, self.d, self.gnn_layers, self.blocks, self.k);
        if self.loss_kind != LossKind::Hyperbola {
            mc.pred_out = self.d;
        }
        mc
    }
}

/// Moving-average coefficient for update `step` of `total`, linear from
/// `ema_tau_start` (first update) to `ema_tau_end` (last update).
pub fn tau_at(cfg: &TrainConfig, step: usize, total: usize) -> f64 {
    if total <= 1 {
        return cfg.ema_tau_start;
    }
    let t = step as f64 / (total - 1) as f64;
    cfg.ema_tau_start + (cfg.ema_tau_end - cfg.ema_tau_start) * t
}

/// Expanded patches of one graph with their positional encodings.
#[derive(Clone, Debug)]
pub struct PreparedGraph {
    pub patches: Vec<Graph>,
    pub pe: Tensor,
}

fn graph_seed(seed: u64, index: usize) -> u64 {
    // splitmix64 finalizer over (seed, index).
    let mut z = seed ^ (index as u64).wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Partitions, expands and encodes one graph. Graphs with fewer nodes than
/// requested patches use one patch per node; a single node is one patch.
pub fn prepare_graph(g: &Graph, cfg: &TrainConfig, index: usize) -> Result<PreparedGraph> {
    let n = g.num_nodes();
    if n == 0 {
        return Err(Error::InvalidArgument(format!("graph {index} has no nodes")));
    }
    let p = cfg.p.min(n);
    if p < 2 {
        let whole = PatchSet::from_assignment(g, vec![0; n], 1)?;
        let pe = match cfg.pe_kind {
            PeKind::NodeMax => crate::posenc::patch_pe_max(&rwse_nodes(g, cfg.k)?, &whole)?.per_patch,
            PeKind::RelativePatch => Tensor::zeros(1, cfg.k),
        };
        return Ok(PreparedGraph {
            patches: vec![g.clone()],
            pe,
        });
    }
    let core = partition(g, p, cfg.partition_method, graph_seed(cfg.seed, index))?;
    let expanded = expand_one_hop(g, &core)?;
    let pe = patch_pe(g, &expanded, cfg.pe_kind, cfg.k)?.per_patch;
    Ok(PreparedGraph {
        patches: expanded.patches().iter().map(|s| s.local_graph.clone()).collect(),
        pe,
    })
}

pub fn prepare_dataset(ds: &GraphDataset, cfg: &TrainConfig) -> Result<Vec<PreparedGraph>> {
    ds.graphs().iter().enumerate().map(|(i, g)| prepare_graph(g, cfg, i)).collect()
}

/// Per-epoch training record.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainLogRow {
    pub epoch: usize,
    pub steps: usize,
    pub loss: f64,
    /// Mean over dimensions of the per-dimension std of target encodings.
    pub target_std: f64,
    /// Std of target angles (row means of target encodings).
    pub alpha_std: f64,
    pub tau: f64,
    pub clamped: usize,
}

pub struct TrainOutput {
    pub model: JepaModel,
    pub log: Vec<TrainLogRow>,
}

pub fn train(ds: &GraphDataset, cfg: &TrainConfig) -> Result<TrainOutput> {
    train_observed(ds, cfg, |_, _| {})
}

struct StepResult {
    loss: f64,
    targets: Tensor,
    clamped: usize,
}

fn population_std(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let n = values.clone().count();
    if n == 0 {
        return 0.0;
    }
    let mean = values.clone().sum::<f64>() / n as f64;
    (values.map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64).sqrt()
}

pub(crate) fn mean_column_std(rows: &Tensor) -> f64 {
    if rows.cols() == 0 {
        return 0.0;
    }
    let total: f64 = (0..rows.cols())
        .map(|c| population_std((0..rows.rows()).map(|r| rows.get(r, c))))
        .sum();
    total / rows.cols() as f64
}

/// Trains and calls `observe` after every epoch.
pub fn train_observed<F>(ds: &GraphDataset, cfg: &TrainConfig, mut observe: F) -> Result<TrainOutput>
where
    F: FnMut(&TrainLogRow, &JepaModel),
{
    cfg.validate()?;
    if ds.is_empty() {
        return Err(Error::InvalidArgument("cannot train on an empty dataset".into()));
    }
    let prepared = prepare_dataset(ds, cfg)?;
    let trainable: Vec<usize> = (0..prepared.len()).filter(|&i| prepared[i].patches.len() >= 2).collect();
    if trainable.is_empty() {
        return Err(Error::InvalidArgument("no graph has enough nodes for a context and a target".into()));
    }
    let mut model = JepaModel::new(cfg.model_config(ds.node_feature_dim(), ds.edge_feature_dim()), cfg.seed)?;
    let mut adam = Adam::new(model.params().tensors(), cfg.lr);
    let mut rng = ChaCha8Rng::seed_from_u64(graph_seed(cfg.seed, usize::MAX));
    let steps_per_epoch = trainable.len().div_ceil(cfg.batch_graphs);
    let total = cfg.epochs * steps_per_epoch;
    let mut order = trainable.clone();
    let mut log = Vec::with_capacity(cfg.epochs);
    let mut step = 0;
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut clamped = 0;
        let mut targets: Vec<Tensor> = Vec::new();
        let mut tau = cfg.ema_tau_start;
        for chunk in order.chunks(cfg.batch_graphs) {
            let samples = chunk
                .iter()
                .map(|&gi| {
                    let p = prepared[gi].patches.len();
                    sample_indices(p, cfg.m.min(p - 1), gi, &mut rng)
                })
                .collect::<Result<Vec<_>>>()?;
            let res = train_step(&mut model, &mut adam, &prepared, &samples, cfg).map_err(|e| match e {
                Error::NonFinite(op) => diverged(epoch, step, &format!("non-finite value in {op}")),
                other => other,
            })?;
            if !res.loss.is_finite() {
                return Err(diverged(epoch, step, &format!("loss {}", res.loss)));
            }
            tau = tau_at(cfg, step, total);
            match cfg.target_mode {
                TargetMode::Ema => model.ema_update(tau)?,
                TargetMode::Shared => model.sync_ema(),
            }
            loss_sum += res.loss;
            clamped += res.clamped;
            targets.push(res.targets);
            step += 1;
        }
        let all = stack_rows(&targets);
        let alphas = (0..all.rows()).map(|r| all.row_slice(r).iter().sum::<f64>() / all.cols().max(1) as f64);
        let row = TrainLogRow {
            epoch,
            steps: steps_per_epoch,
            loss: loss_sum / steps_per_epoch as f64,
            target_std: mean_column_std(&all),
            alpha_std: population_std(alphas.collect::<Vec<_>>().into_iter()),
            tau,
            clamped,
        };
        observe(&row, &model);
        log.push(row);
    }
    Ok(TrainOutput { model, log })
}

fn diverged(epoch: usize, step: usize, what: &str) -> Error {
    Error::Diverged {
        epoch,
        step,
        snapshot: what.to_string(),
    }
}

pub(crate) fn stack_rows(parts: &[Tensor]) -> Tensor {
    let cols = parts.first().map_or(0, Tensor::cols);
    let rows = parts.iter().map(Tensor::rows).sum();
    let data = parts.iter().flat_map(|t| t.data().iter().copied()).collect();
    Tensor::new(rows, cols, data).expect("equal widths")
}

fn train_step(
    model: &mut JepaModel,
    adam: &mut Adam,
    prepared: &[PreparedGraph],
    samples: &[ContextTargetBatch],
    cfg: &TrainConfig,
) -> Result<StepResult> {
    let tape = Tape::new();
    let online = model.online(&tape);
    let target_w = match cfg.target_mode {
        TargetMode::Ema => model.ema_weights(&tape),
        TargetMode::Shared => Weights {
            vars: online.vars.clone(),
            ema: false,
        },
    };

    let contexts: Vec<&Graph> = samples.iter().map(|s| &prepared[s.graph_idx].patches[s.context_idx]).collect();
    let mut target_graphs: Vec<&Graph> = Vec::new();
    let mut owner = Vec::new();
    let mut groups = Vec::with_capacity(samples.len());
    let mut pe_rows: Vec<Tensor> = Vec::with_capacity(samples.len());
    for (b, s) in samples.iter().enumerate() {
        let pg = &prepared[s.graph_idx];
        for &t in &s.target_idxs {
            target_graphs.push(&pg.patches[t]);
            owner.push(b);
        }
        groups.push(s.target_idxs.len());
        pe_rows.push(pg.pe.select_rows(&s.target_idxs));
    }

    let h_x = model.embed_patches(&online, &tape, &PatchBatch::new(&contexts)?)?;
    let z_x = model.encode_context(&online, &tape, &h_x)?;
    let h_y = model.embed_patches(&target_w, &tape, &PatchBatch::new(&target_graphs)?)?;
    let z_y = model.encode_targets(&target_w, &tape, &h_y, &groups)?;

    let pe = tape.constant(stack_rows(&pe_rows));
    let pred = model.predict_coords(&online, &z_x.index_select(&owner)?, &pe)?;
    let mut clamped = 0;
    let loss = match (cfg.loss_kind, cfg.target_mode) {
        (LossKind::Hyperbola, TargetMode::Ema) => {
            let target = hyperbolic_target(&z_y.to_tensor());
            jepa_loss(&pred, &target, cfg.beta)?
        }
        (LossKind::Hyperbola, TargetMode::Shared) => smooth_l1(&pred, &hyperbolic_target_var(&z_y)?, cfg.beta)?,
        (LossKind::Euclidean, _) => alt_loss_euclidean(&pred, &z_y, cfg.beta)?,
        (LossKind::Poincare, _) => {
            let l = alt_loss_poincare(&pred, &z_y)?;
            clamped = l.clamped;
            l.loss
        }
    };
    let loss_value = loss.item();
    if !loss_value.is_finite() {
        return Ok(StepResult {
            loss: loss_value,
            targets: z_y.to_tensor(),
            clamped,
        });
    }
    tape.backward(loss)?;
    let grads: Vec<Option<Tensor>> = online.iter().map(|v| v.grad()).collect();
    let targets = z_y.to_tensor();
    drop(online);
    drop(target_w);
    adam.step(model.params_mut().tensors_mut(), &grads)?;
    Ok(StepResult {
        loss: loss_value,
        targets,
        clamped,
    })
}
