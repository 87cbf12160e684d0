use rand_chacha::ChaCha8Rng;

use super::{Linear, ParamStore};
use crate::autodiff::{Tape, Tensor, Var};
use crate::error::{Error, Result};
use crate::graph::Graph;

/// Disjoint union of patch graphs, ready for message passing.
///
/// Every undirected edge contributes one message in each direction.
#[derive(Clone, Debug)]
pub struct PatchBatch {
    pub node_features: Tensor,
    pub edge_features: Tensor,
    pub src: Vec<usize>,
    pub dst: Vec<usize>,
    pub node_patch: Vec<usize>,
    pub inv_sizes: Tensor,
}

impl PatchBatch {
    pub fn new(graphs: &[&Graph]) -> Result<Self> {
        let first = graphs
            .first()
            .ok_or_else(|| Error::InvalidArgument("empty patch batch".into()))?;
        let (fn_, fe) = (first.node_features().cols(), first.edge_features().cols());
        let total_nodes: usize = graphs.iter().map(|g| g.num_nodes()).sum();
        let total_msgs: usize = graphs.iter().map(|g| 2 * g.num_edges()).sum();
        let mut nf = Vec::with_capacity(total_nodes * fn_);
        let mut ef = Vec::with_capacity(total_msgs * fe);
        let mut src = Vec::with_capacity(total_msgs);
        let mut dst = Vec::with_capacity(total_msgs);
        let mut node_patch = Vec::with_capacity(total_nodes);
        let mut inv = Vec::with_capacity(graphs.len());
        let mut offset = 0;
        for (pi, g) in graphs.iter().enumerate() {
            if g.node_features().cols() != fn_ || g.edge_features().cols() != fe {
                return Err(Error::shape(
                    "patch_batch",
                    &[fn_, fe],
                    &[g.node_features().cols(), g.edge_features().cols()],
                ));
            }
            if g.num_nodes() == 0 {
                return Err(Error::InvalidArgument(format!("patch {pi} has no nodes")));
            }
            nf.extend_from_slice(g.node_features().data());
            for (k, &(u, v)) in g.edges().iter().enumerate() {
                let row = g.edge_features().row_slice(k);
                src.push(offset + u);
                dst.push(offset + v);
                ef.extend_from_slice(row);
                src.push(offset + v);
                dst.push(offset + u);
                ef.extend_from_slice(row);
            }
            node_patch.extend(std::iter::repeat(pi).take(g.num_nodes()));
            inv.push(1.0 / g.num_nodes() as f64);
            offset += g.num_nodes();
        }
        Ok(Self {
            node_features: Tensor::new(total_nodes, fn_, nf)?,
            edge_features: Tensor::new(total_msgs, fe, ef)?,
            src,
            dst,
            node_patch,
            inv_sizes: Tensor::new(graphs.len(), 1, inv)?,
        })
    }

    pub fn num_patches(&self) -> usize {
        self.inv_sizes.rows()
    }

    pub fn num_nodes(&self) -> usize {
        self.node_patch.len()
    }
}

#[derive(Clone, Debug)]
struct GineLayer {
    edge: Linear,
    hidden: Linear,
    out: Linear,
}

/// GIN with edge features and a fixed `eps = 0`:
/// `x' = MLP(x_v + sum_u relu(x_u + W_e e_uv + b_e))`, ReLU between layers.
#[derive(Clone, Debug)]
pub struct Gine {
    layers: Vec<GineLayer>,
    input_dim: usize,
    edge_dim: usize,
}

impl Gine {
    pub fn new(
        store: &mut ParamStore,
        node_dim: usize,
        edge_dim: usize,
        dim: usize,
        num_layers: usize,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        let layers = (0..num_layers)
            .map(|l| {
                let input = if l == 0 { node_dim } else { dim };
                GineLayer {
                    edge: Linear::new(store, &format!("gnn.{l}.edge"), edge_dim, input, rng),
                    hidden: Linear::new(store, &format!("gnn.{l}.mlp0"), input, dim, rng),
                    out: Linear::new(store, &format!("gnn.{l}.mlp1"), dim, dim, rng),
                }
            })
            .collect();
        Self {
            layers,
            input_dim: node_dim,
            edge_dim,
        }
    }

    /// Node embeddings for every node of the batch.
    pub fn forward<'t>(&self, w: &[Var<'t>], tape: &'t Tape, batch: &PatchBatch) -> Result<Var<'t>> {
        if batch.node_features.cols() != self.input_dim || batch.edge_features.cols() != self.edge_dim {
            return Err(Error::shape(
                "gine_encode",
                &[self.input_dim, self.edge_dim],
                &[batch.node_features.cols(), batch.edge_features.cols()],
            ));
        }
        let n = batch.num_nodes();
        let mut x = tape.constant(batch.node_features.clone());
        let e = tape.constant(batch.edge_features.clone());
        for (l, layer) in self.layers.iter().enumerate() {
            let mut h = x;
            if !batch.src.is_empty() {
                let msg = x.index_select(&batch.src)?.add(&layer.edge.forward(w, &e)?)?.relu()?;
                h = h.add(&msg.scatter_add(&batch.dst, n)?)?;
            }
            x = layer.out.forward(w, &layer.hidden.forward(w, &h)?.relu()?)?;
            if l + 1 < self.layers.len() {
                x = x.relu()?;
            }
        }
        Ok(x)
    }

    /// Mean of node embeddings per patch.
    pub fn pool<'t>(&self, tape: &'t Tape, nodes: &Var<'t>, batch: &PatchBatch) -> Result<Var<'t>> {
        let summed = nodes.scatter_add(&batch.node_patch, batch.num_patches())?;
        summed.mul(&tape.constant(batch.inv_sizes.clone()))
    }
}
