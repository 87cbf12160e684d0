//! Random-walk structural encodings for nodes and patches.

use serde::{Deserialize, Serialize};

use crate::autodiff::Tensor;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::partition::PatchSet;

/// Per-node return probabilities `(M_vv, (M^2)_vv, ..., (M^k)_vv)` with
/// `M = D^-1 A`. Isolated nodes get all-zero rows.
#[derive(Clone, Debug)]
pub struct Rwse {
    pub per_node: Tensor,
    pub order: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PeKind {
    /// Elementwise max of member-node encodings.
    #[serde(rename = "node")]
    NodeMax,
    /// Encoding of the patch-overlap graph.
    #[serde(rename = "relative")]
    RelativePatch,
}

impl std::str::FromStr for PeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "node" | "node_max" => Ok(Self::NodeMax),
            "patch" | "relative" | "relative_patch" => Ok(Self::RelativePatch),
            other => Err(Error::InvalidArgument(format!("unknown positional encoding '{other}'"))),
        }
    }
}

impl std::fmt::Display for PeKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::NodeMax => "node",
            Self::RelativePatch => "relative",
        })
    }
}

#[derive(Clone, Debug)]
pub struct PatchPE {
    pub per_patch: Tensor,
    pub kind: PeKind,
}

pub fn rwse_nodes(g: &Graph, k: usize) -> Result<Rwse> {
    if k == 0 {
        return Err(Error::InvalidArgument("random-walk order must be at least 1".into()));
    }
    let n = g.num_nodes();
    let inv_deg: Vec<f64> = (0..n)
        .map(|v| match g.degree(v) {
            0 => 0.0,
            d => 1.0 / d as f64,
        })
        .collect();
    // power = M^j, advanced by right-multiplying with the sparse M.
    let mut power = Tensor::zeros(n, n);
    for v in 0..n {
        for &u in g.neighbors(v) {
            power.set(v, u, inv_deg[v]);
        }
    }
    let mut out = Tensor::zeros(n, k);
    let mut next = Tensor::zeros(n, n);
    for j in 0..k {
        for v in 0..n {
            out.set(v, j, power.get(v, v));
        }
        if j + 1 == k {
            break;
        }
        next.data_mut().iter_mut().for_each(|x| *x = 0.0);
        for i in 0..n {
            let src = power.row_slice(i);
            let dst = next.row_slice_mut(i);
            for (v, &piv) in src.iter().enumerate() {
                if piv == 0.0 {
                    continue;
                }
                let w = piv * inv_deg[v];
                for &u in g.neighbors(v) {
                    dst[u] += w;
                }
            }
        }
        std::mem::swap(&mut power, &mut next);
    }
    Ok(Rwse { per_node: out, order: k })
}

/// Elementwise max over the (expanded) member nodes of each patch.
pub fn patch_pe_max(rwse: &Rwse, ps: &PatchSet) -> Result<PatchPE> {
    let k = rwse.order;
    let mut out = Tensor::zeros(ps.num_patches(), k);
    for (i, sg) in ps.patches().iter().enumerate() {
        if sg.node_ids.is_empty() {
            return Err(Error::InvalidArgument(format!("patch {i} is empty")));
        }
        let row = out.row_slice_mut(i);
        row.fill(f64::NEG_INFINITY);
        for &v in &sg.node_ids {
            if v >= rwse.per_node.rows() {
                return Err(Error::InvalidArgument(format!("node {v} outside the encoded graph")));
            }
            for (o, &x) in row.iter_mut().zip(rwse.per_node.row_slice(v)) {
                *o = o.max(x);
            }
        }
    }
    Ok(PatchPE {
        per_patch: out,
        kind: PeKind::NodeMax,
    })
}

/// Random-walk encoding of the binarized patch-overlap graph `B Bᵀ`.
pub fn patch_pe_relative(g: &Graph, ps: &PatchSet, k: usize) -> Result<PatchPE> {
    let p = ps.num_patches();
    if p < 2 {
        return Err(Error::InvalidArgument("relative encoding needs at least two patches".into()));
    }
    let mut member = vec![vec![false; g.num_nodes()]; p];
    for (i, sg) in ps.patches().iter().enumerate() {
        for &v in &sg.node_ids {
            member[i][v] = true;
        }
    }
    let mut edges = Vec::new();
    for i in 0..p {
        for j in i + 1..p {
            if member[i].iter().zip(&member[j]).any(|(&a, &b)| a && b) {
                edges.push((i, j));
            }
        }
    }
    let coarse = Graph::from_edges(p, edges)?;
    Ok(PatchPE {
        per_patch: rwse_nodes(&coarse, k)?.per_node,
        kind: PeKind::RelativePatch,
    })
}

pub fn patch_pe(g: &Graph, ps: &PatchSet, kind: PeKind, k: usize) -> Result<PatchPE> {
    match kind {
        PeKind::NodeMax => patch_pe_max(&rwse_nodes(g, k)?, ps),
        PeKind::RelativePatch => patch_pe_relative(g, ps, k),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k3() -> Graph {
        Graph::from_edges(3, vec![(0, 1), (1, 2), (0, 2)]).unwrap()
    }

    fn close(a: &[f64], b: &[f64]) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-15)
    }

    #[test]
    fn triangle_return_probabilities() {
        let r = rwse_nodes(&k3(), 3).unwrap();
        for v in 0..3 {
            assert!(close(r.per_node.row_slice(v), &[0.0, 0.5, 0.25]));
        }
    }

    #[test]
    fn isolated_node_and_single_edge() {
        let r = rwse_nodes(&Graph::from_edges(1, vec![]).unwrap(), 4).unwrap();
        assert!(r.per_node.data().iter().all(|&x| x == 0.0));
        let r = rwse_nodes(&Graph::from_edges(2, vec![(0, 1)]).unwrap(), 2).unwrap();
        assert!(close(r.per_node.row_slice(0), &[0.0, 1.0]));
        assert!(close(r.per_node.row_slice(1), &[0.0, 1.0]));
        assert!(rwse_nodes(&k3(), 0).is_err());
    }

    #[test]
    fn patch_max_is_elementwise() {
        let g = Graph::from_edges(3, vec![(0, 1), (1, 2)]).unwrap();
        let rw = Rwse {
            per_node: Tensor::new(3, 2, vec![0.0, 0.5, 0.0, 0.25, 0.3, 0.1]).unwrap(),
            order: 2,
        };
        let ps = PatchSet::from_assignment(&g, vec![0, 0, 1], 2).unwrap();
        let pe = patch_pe_max(&rw, &ps).unwrap();
        assert!(close(pe.per_patch.row_slice(0), &[0.0, 0.5]));
        assert!(close(pe.per_patch.row_slice(1), &[0.3, 0.1]));
    }

    #[test]
    fn relative_encoding_reduces_to_small_walks() {
        let g = Graph::from_edges(4, vec![(0, 1), (2, 3)]).unwrap();
        let disjoint = PatchSet::from_assignment(&g, vec![0, 0, 1, 1], 2).unwrap();
        let pe = patch_pe_relative(&g, &disjoint, 3).unwrap();
        assert!(pe.per_patch.data().iter().all(|&x| x == 0.0));

        let path = Graph::from_edges(4, vec![(0, 1), (1, 2), (2, 3)]).unwrap();
        let ps = PatchSet::from_assignment(&path, vec![0, 0, 1, 1], 2).unwrap();
        let ex = crate::partition::expand_one_hop(&path, &ps).unwrap();
        let pe = patch_pe_relative(&path, &ex, 3).unwrap();
        assert!(close(pe.per_patch.row_slice(0), &[0.0, 1.0, 0.0]));

        let tri = k3();
        let ps = PatchSet::from_assignment(&tri, vec![0, 1, 2], 3).unwrap();
        let ex = crate::partition::expand_one_hop(&tri, &ps).unwrap();
        let pe = patch_pe_relative(&tri, &ex, 3).unwrap();
        assert!(close(pe.per_patch.row_slice(2), &[0.0, 0.5, 0.25]));

        let one = PatchSet::from_assignment(&tri, vec![0, 0, 0], 1).unwrap();
        assert!(patch_pe_relative(&tri, &one, 3).is_err());
    }
}
