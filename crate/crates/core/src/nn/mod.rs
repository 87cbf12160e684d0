//! Networks of the model: edge-aware GIN over patches, pre-norm transformer
//! blocks and the coordinate predictor, all over a flat parameter store.

mod gine;
mod model;
mod predictor;
mod transformer;

pub use gine::{Gine, PatchBatch};
pub use model::{JepaModel, ModelConfig, ParamCounts, Weights};
pub use predictor::Predictor;
pub use transformer::{Block, Encoder};

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::autodiff::{Tape, Tensor, Var};
use crate::error::Result;

/// Index of a tensor inside a [`ParamStore`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ParamId(pub(crate) usize);

/// Named parameter tensors in allocation order.
#[derive(Clone, Debug, Default)]
pub struct ParamStore {
    names: Vec<String>,
    tensors: Vec<Tensor>,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: impl Into<String>, value: Tensor) -> ParamId {
        self.names.push(name.into());
        self.tensors.push(value);
        ParamId(self.tensors.len() - 1)
    }

    pub fn get(&self, id: ParamId) -> &Tensor {
        &self.tensors[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Tensor {
        &mut self.tensors[id.0]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn tensors(&self) -> &[Tensor] {
        &self.tensors
    }

    pub fn tensors_mut(&mut self) -> &mut [Tensor] {
        &mut self.tensors
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn num_scalars(&self, range: std::ops::Range<usize>) -> usize {
        self.tensors[range].iter().map(Tensor::len).sum()
    }
}

/// Records each tensor on `tape`, as trainable leaves or as constants.
pub fn bind<'t>(tape: &'t Tape, tensors: &[Tensor], trainable: bool) -> Vec<Var<'t>> {
    tensors.iter().map(|t| tape.leaf(t.clone(), trainable)).collect()
}

fn uniform(rng: &mut ChaCha8Rng, rows: usize, cols: usize, bound: f64) -> Tensor {
    let data = (0..rows * cols).map(|_| rng.gen_range(-bound..=bound)).collect();
    Tensor::new(rows, cols, data).expect("sized buffer")
}

/// Affine map `x W + b` with `W: in x out`.
#[derive(Clone, Debug)]
pub struct Linear {
    pub weight: ParamId,
    pub bias: ParamId,
}

impl Linear {
    /// Weights and bias drawn from `U(-1/sqrt(in), 1/sqrt(in))`.
    pub fn new(store: &mut ParamStore, name: &str, input: usize, output: usize, rng: &mut ChaCha8Rng) -> Self {
        let bound = 1.0 / (input.max(1) as f64).sqrt();
        let weight = store.add(format!("{name}.weight"), uniform(rng, input, output, bound));
        let bias = store.add(format!("{name}.bias"), uniform(rng, 1, output, bound));
        Self { weight, bias }
    }

    pub fn forward<'t>(&self, w: &[Var<'t>], x: &Var<'t>) -> Result<Var<'t>> {
        x.matmul(&w[self.weight.0])?.add(&w[self.bias.0])
    }
}

/// Layer normalization over the last axis with learned gain and shift.
#[derive(Clone, Debug)]
pub struct LayerNorm {
    pub gain: ParamId,
    pub shift: ParamId,
}

impl LayerNorm {
    pub const EPS: f64 = 1e-5;

    pub fn new(store: &mut ParamStore, name: &str, dim: usize) -> Self {
        Self {
            gain: store.add(format!("{name}.gain"), Tensor::full(1, dim, 1.0)),
            shift: store.add(format!("{name}.shift"), Tensor::zeros(1, dim)),
        }
    }

    pub fn forward<'t>(&self, w: &[Var<'t>], x: &Var<'t>) -> Result<Var<'t>> {
        x.layer_norm(Self::EPS)?.mul(&w[self.gain.0])?.add(&w[self.shift.0])
    }
}
