use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{bind, Encoder, Gine, ParamStore, PatchBatch, Predictor};
use crate::autodiff::{Tape, Tensor, Var};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub node_dim: usize,
    pub edge_dim: usize,
    pub dim: usize,
    pub gnn_layers: usize,
    pub blocks: usize,
    pub pe_dim: usize,
    pub pred_hidden: usize,
    pub pred_out: usize,
}

impl ModelConfig {
    /// Predictor with hidden width `dim / 2` and two outputs.
    pub fn new(node_dim: usize, edge_dim: usize, dim: usize, gnn_layers: usize, blocks: usize, pe_dim: usize) -> Self {
        Self {
            node_dim,
            edge_dim,
            dim,
            gnn_layers,
            blocks,
            pe_dim,
            pred_hidden: (dim / 2).max(1),
            pred_out: 2,
        }
    }

    fn validate(&self) -> Result<()> {
        let fields = [
            ("node_dim", self.node_dim),
            ("edge_dim", self.edge_dim),
            ("dim", self.dim),
            ("gnn_layers", self.gnn_layers),
            ("pe_dim", self.pe_dim),
            ("pred_hidden", self.pred_hidden),
            ("pred_out", self.pred_out),
        ];
        match fields.iter().find(|(_, v)| *v == 0) {
            Some((name, _)) => Err(Error::InvalidArgument(format!("model {name} must be positive"))),
            None => Ok(()),
        }
    }
}

/// Parameters bound to one tape. `ema` marks the moving-average copy.
pub struct Weights<'t> {
    pub vars: Vec<Var<'t>>,
    pub ema: bool,
}

impl<'t> std::ops::Deref for Weights<'t> {
    type Target = [Var<'t>];

    fn deref(&self) -> &Self::Target {
        &self.vars
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ParamCounts {
    pub gnn: usize,
    pub encoder: usize,
    pub predictor: usize,
}

/// Online GNN, encoder and predictor plus moving-average copies of the GNN
/// and encoder. The copies share the online tensor indices, so one set of
/// layer handles serves both.
#[derive(Clone, Debug)]
pub struct JepaModel {
    pub config: ModelConfig,
    params: ParamStore,
    ema: Vec<Tensor>,
    gnn_len: usize,
    ema_len: usize,
    gnn: Gine,
    encoder: Encoder,
    predictor: Predictor,
}

impl JepaModel {
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = ParamStore::new();
        let c = &config;
        let gnn = Gine::new(&mut params, c.node_dim, c.edge_dim, c.dim, c.gnn_layers, &mut rng);
        let gnn_len = params.len();
        let encoder = Encoder::new(&mut params, c.dim, c.blocks, &mut rng);
        let ema_len = params.len();
        let predictor = Predictor::new(&mut params, c.dim, c.pe_dim, c.pred_hidden, c.pred_out, &mut rng);
        let ema = params.tensors()[..ema_len].to_vec();
        Ok(Self {
            config,
            params,
            ema,
            gnn_len,
            ema_len,
            gnn,
            encoder,
            predictor,
        })
    }

    pub fn params(&self) -> &ParamStore {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamStore {
        &mut self.params
    }

    pub fn ema(&self) -> &[Tensor] {
        &self.ema
    }

    pub fn ema_mut(&mut self) -> &mut [Tensor] {
        &mut self.ema
    }

    /// Names of the tensors tracked by the moving average.
    pub fn ema_names(&self) -> &[String] {
        &self.params.names()[..self.ema_len]
    }

    pub fn param_counts(&self) -> ParamCounts {
        ParamCounts {
            gnn: self.params.num_scalars(0..self.gnn_len),
            encoder: self.params.num_scalars(self.gnn_len..self.ema_len),
            predictor: self.params.num_scalars(self.ema_len..self.params.len()),
        }
    }

    pub fn online<'t>(&self, tape: &'t Tape) -> Weights<'t> {
        Weights {
            vars: bind(tape, self.params.tensors(), true),
            ema: false,
        }
    }

    /// Online weights recorded as constants, for inference.
    pub fn online_frozen<'t>(&self, tape: &'t Tape) -> Weights<'t> {
        Weights {
            vars: bind(tape, self.params.tensors(), false),
            ema: false,
        }
    }

    pub fn ema_weights<'t>(&self, tape: &'t Tape) -> Weights<'t> {
        Weights {
            vars: bind(tape, &self.ema, false),
            ema: true,
        }
    }

    pub fn gine_encode<'t>(&self, w: &Weights<'t>, tape: &'t Tape, batch: &PatchBatch) -> Result<Var<'t>> {
        self.gnn.forward(w, tape, batch)
    }

    /// One mean-pooled embedding per patch of the batch.
    pub fn embed_patches<'t>(&self, w: &Weights<'t>, tape: &'t Tape, batch: &PatchBatch) -> Result<Var<'t>> {
        let nodes = self.gnn.forward(w, tape, batch)?;
        self.gnn.pool(tape, &nodes, batch)
    }

    /// Each row is an independent context token.
    pub fn encode_context<'t>(&self, w: &Weights<'t>, tape: &'t Tape, h: &Var<'t>) -> Result<Var<'t>> {
        let groups = vec![1; h.shape()[0]];
        self.encoder.forward(w, tape, h, &groups)
    }

    /// Encodes target tokens jointly within each group. Outputs of the
    /// moving-average weights are detached.
    pub fn encode_targets<'t>(
        &self,
        w: &Weights<'t>,
        tape: &'t Tape,
        h: &Var<'t>,
        groups: &[usize],
    ) -> Result<Var<'t>> {
        let z = self.encoder.forward(w, tape, h, groups)?;
        Ok(if w.ema { z.stop_gradient() } else { z })
    }

    pub fn predict_coords<'t>(&self, w: &Weights<'t>, z: &Var<'t>, pe: &Var<'t>) -> Result<Var<'t>> {
        if pe.shape()[1] != self.config.pe_dim {
            return Err(Error::shape("predict_coords", &[self.config.pe_dim], &[pe.shape()[1]]));
        }
        self.predictor.forward(w, z, pe)
    }

    /// `ema <- tau * ema + (1 - tau) * online` for the GNN and encoder.
    pub fn ema_update(&mut self, tau: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&tau) {
            return Err(Error::InvalidArgument(format!("tau {tau} outside [0, 1]")));
        }
        for (e, o) in self.ema.iter_mut().zip(self.params.tensors()) {
            for (ev, &ov) in e.data_mut().iter_mut().zip(o.data()) {
                *ev = tau * *ev + (1.0 - tau) * ov;
            }
        }
        Ok(())
    }

    /// Copies the online GNN and encoder into the moving average.
    pub fn sync_ema(&mut self) {
        self.ema = self.params.tensors()[..self.ema_len].to_vec();
    }

    #[cfg(test)]
    pub(crate) fn layers(&self) -> (&Gine, &Encoder, &Predictor) {
        (&self.gnn, &self.encoder, &self.predictor)
    }
}
