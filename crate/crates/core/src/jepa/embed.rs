use super::train::{prepare_dataset, PreparedGraph, TrainConfig};
use crate::autodiff::{Tape, Tensor};
use crate::error::{Error, Result};
use crate::graph::{Graph, GraphDataset};
use crate::nn::{JepaModel, PatchBatch};

/// Frozen graph-level embeddings.
#[derive(Clone, Debug)]
pub struct Embeddings {
    /// One row per graph: mean of its encoded patches.
    pub graph: Tensor,
    /// Row mean of every encoded patch, graph by graph.
    pub patch_alphas: Vec<f64>,
}

const CHUNK: usize = 64;

/// Encodes every patch of each graph with the moving-average weights and
/// averages over patches.
pub fn embed_prepared(model: &JepaModel, prepared: &[PreparedGraph]) -> Result<Embeddings> {
    let d = model.config.dim;
    let mut graph = Tensor::zeros(prepared.len(), d);
    let mut patch_alphas = Vec::new();
    for (c, chunk) in prepared.chunks(CHUNK).enumerate() {
        let tape = Tape::new();
        let w = model.ema_weights(&tape);
        let patches: Vec<&Graph> = chunk.iter().flat_map(|pg| pg.patches.iter()).collect();
        let groups: Vec<usize> = chunk.iter().map(|pg| pg.patches.len()).collect();
        if groups.contains(&0) {
            return Err(Error::InvalidArgument("graph without patches".into()));
        }
        let h = model.embed_patches(&w, &tape, &PatchBatch::new(&patches)?)?;
        let z = model.encode_targets(&w, &tape, &h, &groups)?;
        let z = z.value();
        let mut row = 0;
        for (i, &size) in groups.iter().enumerate() {
            let out = graph.row_slice_mut(c * CHUNK + i);
            for r in row..row + size {
                patch_alphas.push(z.row_slice(r).iter().sum::<f64>() / d as f64);
                for (o, &x) in out.iter_mut().zip(z.row_slice(r)) {
                    *o += x / size as f64;
                }
            }
            row += size;
        }
    }
    if !graph.is_finite() {
        return Err(Error::NonFinite("embedding"));
    }
    Ok(Embeddings { graph, patch_alphas })
}

pub fn embed_dataset(ds: &GraphDataset, model: &JepaModel, cfg: &TrainConfig) -> Result<Embeddings> {
    embed_prepared(model, &prepare_dataset(ds, cfg)?)
}
