use rand_chacha::ChaCha8Rng;

use super::{Linear, ParamStore};
use crate::autodiff::Var;
use crate::error::Result;

/// `W2 gelu(W1 (z + proj(pe)) + b1) + b2`, where `proj` maps the
/// positional encoding to the embedding width.
#[derive(Clone, Debug)]
pub struct Predictor {
    pub pe_proj: Linear,
    pub hidden: Linear,
    pub out: Linear,
}

impl Predictor {
    pub fn new(
        store: &mut ParamStore,
        dim: usize,
        pe_dim: usize,
        hidden: usize,
        out: usize,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        Self {
            pe_proj: Linear::new(store, "predictor.pe_proj", pe_dim, dim, rng),
            hidden: Linear::new(store, "predictor.hidden", dim, hidden, rng),
            out: Linear::new(store, "predictor.out", hidden, out, rng),
        }
    }

    /// `z` is either one row (broadcast to every target) or one row per target.
    pub fn forward<'t>(&self, w: &[Var<'t>], z: &Var<'t>, pe: &Var<'t>) -> Result<Var<'t>> {
        let cond = z.add(&self.pe_proj.forward(w, pe)?)?;
        self.out.forward(w, &self.hidden.forward(w, &cond)?.gelu()?)
    }
}
