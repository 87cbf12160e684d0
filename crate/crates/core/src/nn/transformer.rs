use rand_chacha::ChaCha8Rng;

use super::{LayerNorm, Linear, ParamStore};
use crate::autodiff::{Axis, Tape, Tensor, Var};
use crate::error::{Error, Result};

/// Pre-norm block: `x + Attn(LN(x))`, then `x + FFN(LN(x))` with a
/// `d -> 2d -> d` GELU feed-forward. Attention is single-head.
#[derive(Clone, Debug)]
pub struct Block {
    pub norm_attn: LayerNorm,
    pub query: Linear,
    pub key: Linear,
    pub value: Linear,
    pub attn_out: Linear,
    pub norm_ffn: LayerNorm,
    pub ffn_in: Linear,
    pub ffn_out: Linear,
}

#[derive(Clone, Debug)]
pub struct Encoder {
    pub blocks: Vec<Block>,
    dim: usize,
}

/// Additive mask that confines attention to consecutive token groups.
pub(crate) fn group_mask(groups: &[usize]) -> Tensor {
    let m: usize = groups.iter().sum();
    let mut mask = Tensor::full(m, m, -1e30);
    let mut start = 0;
    for &g in groups {
        for i in start..start + g {
            for j in start..start + g {
                mask.set(i, j, 0.0);
            }
        }
        start += g;
    }
    mask
}

impl Encoder {
    pub fn new(store: &mut ParamStore, dim: usize, num_blocks: usize, rng: &mut ChaCha8Rng) -> Self {
        let blocks = (0..num_blocks)
            .map(|b| {
                let n = |s: &str| format!("encoder.{b}.{s}");
                Block {
                    norm_attn: LayerNorm::new(store, &n("norm_attn"), dim),
                    query: Linear::new(store, &n("query"), dim, dim, rng),
                    key: Linear::new(store, &n("key"), dim, dim, rng),
                    value: Linear::new(store, &n("value"), dim, dim, rng),
                    attn_out: Linear::new(store, &n("attn_out"), dim, dim, rng),
                    norm_ffn: LayerNorm::new(store, &n("norm_ffn"), dim),
                    ffn_in: Linear::new(store, &n("ffn_in"), dim, 2 * dim, rng),
                    ffn_out: Linear::new(store, &n("ffn_out"), 2 * dim, dim, rng),
                }
            })
            .collect();
        Self { blocks, dim }
    }

    /// Encodes `x` (tokens as rows). Tokens attend only within their group;
    /// `groups` lists consecutive group sizes and must sum to the row count.
    pub fn forward<'t>(&self, w: &[Var<'t>], tape: &'t Tape, x: &Var<'t>, groups: &[usize]) -> Result<Var<'t>> {
        let [m, d] = x.shape();
        if d != self.dim {
            return Err(Error::shape("encoder", &[m, self.dim], &[m, d]));
        }
        if groups.iter().sum::<usize>() != m || groups.contains(&0) {
            return Err(Error::InvalidArgument(format!("token groups {groups:?} do not cover {m} rows")));
        }
        let singletons = groups.iter().all(|&g| g == 1);
        let mask = if singletons || groups.len() == 1 {
            None
        } else {
            Some(tape.constant(group_mask(groups)))
        };
        let scale = 1.0 / (d as f64).sqrt();
        let mut x = *x;
        for blk in &self.blocks {
            let a = blk.norm_attn.forward(w, &x)?;
            let v = blk.value.forward(w, &a)?;
            // A lone token attends to itself with weight exactly 1.
            let mixed = if singletons {
                v
            } else {
                let q = blk.query.forward(w, &a)?;
                let k = blk.key.forward(w, &a)?;
                let mut scores = q.matmul(&k.transpose()?)?.scale(scale)?;
                if let Some(mask) = &mask {
                    scores = scores.add(mask)?;
                }
                scores.softmax(Axis::Cols)?.matmul(&v)?
            };
            x = x.add(&blk.attn_out.forward(w, &mixed)?)?;
            let f = blk.norm_ffn.forward(w, &x)?;
            let f = blk.ffn_out.forward(w, &blk.ffn_in.forward(w, &f)?.gelu()?)?;
            x = x.add(&f)?;
        }
        Ok(x)
    }
}
