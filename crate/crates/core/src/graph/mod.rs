//! Undirected attributed graphs, datasets, synthetic generators and 1-WL.

mod generate;
mod io;
mod wl;

pub use generate::{csl, csl_pair_dataset, permute_nodes, random_graph, toy_dataset};
pub use io::{load_dataset, load_jsonl, load_tu, parse_dataset_spec, parse_graph_spec, write_jsonl, DatasetFormat};
pub use wl::{wl1_color_histogram, wl1_indistinguishable, ColorHistogram};

use serde::{Deserialize, Serialize};

use crate::autodiff::Tensor;
use crate::error::{Error, Result};

/// Supervision attached to a graph.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Label {
    Class(usize),
    Values(Vec<f64>),
}

/// Simple undirected graph with node and edge feature matrices.
#[derive(Clone, Debug)]
pub struct Graph {
    num_nodes: usize,
    edges: Vec<(usize, usize)>,
    node_features: Tensor,
    edge_features: Tensor,
    label: Option<Label>,
    neighbors: Vec<Vec<usize>>,
}

impl Graph {
    /// Validates and builds a graph. Edges are stored with `u < v`.
    pub fn new(
        num_nodes: usize,
        edges: Vec<(usize, usize)>,
        node_features: Tensor,
        edge_features: Tensor,
        label: Option<Label>,
    ) -> Result<Self> {
        let mut seen = std::collections::HashSet::with_capacity(edges.len());
        let mut canon = Vec::with_capacity(edges.len());
        for &(u, v) in &edges {
            if u >= num_nodes || v >= num_nodes {
                return Err(Error::Schema(format!(
                    "edge ({u},{v}) out of range for {num_nodes} nodes"
                )));
            }
            if u == v {
                return Err(Error::Schema(format!("self-loop on node {u}")));
            }
            let e = (u.min(v), u.max(v));
            if !seen.insert(e) {
                return Err(Error::Schema(format!("duplicate edge ({u},{v})")));
            }
            canon.push(e);
        }
        if node_features.rows() != num_nodes {
            return Err(Error::Schema(format!(
                "node_features has {} rows, expected {num_nodes}",
                node_features.rows()
            )));
        }
        if edge_features.rows() != canon.len() {
            return Err(Error::Schema(format!(
                "edge_features has {} rows, expected {}",
                edge_features.rows(),
                canon.len()
            )));
        }
        let mut neighbors = vec![Vec::new(); num_nodes];
        for &(u, v) in &canon {
            neighbors[u].push(v);
            neighbors[v].push(u);
        }
        for n in &mut neighbors {
            n.sort_unstable();
        }
        Ok(Self {
            num_nodes,
            edges: canon,
            node_features,
            edge_features,
            label,
            neighbors,
        })
    }

    /// Graph with constant-zero node and edge features of width 1.
    pub fn from_edges(num_nodes: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        let m = edges.len();
        Self::new(
            num_nodes,
            edges,
            Tensor::zeros(num_nodes, 1),
            Tensor::zeros(m, 1),
            None,
        )
    }

    pub fn with_label(mut self, label: Label) -> Self {
        self.label = Some(label);
        self
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn node_features(&self) -> &Tensor {
        &self.node_features
    }

    pub fn edge_features(&self) -> &Tensor {
        &self.edge_features
    }

    pub fn label(&self) -> Option<&Label> {
        self.label.as_ref()
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.neighbors[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.neighbors[v].len()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.neighbors[u].binary_search(&v).is_ok()
    }

    /// Dense symmetric 0/1 adjacency matrix.
    pub fn adjacency(&self) -> Tensor {
        let n = self.num_nodes;
        let mut a = Tensor::zeros(n, n);
        for &(u, v) in &self.edges {
            a.set(u, v, 1.0);
            a.set(v, u, 1.0);
        }
        a
    }

    /// Subgraph induced by `nodes` (kept in the given order), carrying the
    /// matching node and edge feature rows.
    pub fn induced_subgraph(&self, nodes: &[usize]) -> Result<Graph> {
        let mut local = std::collections::HashMap::with_capacity(nodes.len());
        for (i, &v) in nodes.iter().enumerate() {
            if v >= self.num_nodes {
                return Err(Error::InvalidArgument(format!("node {v} out of range")));
            }
            local.insert(v, i);
        }
        let mut edges = Vec::new();
        let mut edge_rows = Vec::new();
        for (k, &(u, v)) in self.edges.iter().enumerate() {
            if let (Some(&a), Some(&b)) = (local.get(&u), local.get(&v)) {
                edges.push((a, b));
                edge_rows.push(k);
            }
        }
        Graph::new(
            nodes.len(),
            edges,
            self.node_features.select_rows(nodes),
            self.edge_features.select_rows(&edge_rows),
            self.label.clone(),
        )
    }

    /// Number of connected components.
    pub fn num_components(&self) -> usize {
        let mut seen = vec![false; self.num_nodes];
        let mut count = 0;
        for s in 0..self.num_nodes {
            if seen[s] {
                continue;
            }
            count += 1;
            let mut stack = vec![s];
            seen[s] = true;
            while let Some(u) = stack.pop() {
                for &v in &self.neighbors[u] {
                    if !seen[v] {
                        seen[v] = true;
                        stack.push(v);
                    }
                }
            }
        }
        count
    }
}

/// Downstream task attached to a dataset.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Task {
    Classification { num_classes: usize },
    Regression { dim: usize },
}

/// Ordered collection of graphs that share feature widths.
#[derive(Clone, Debug)]
pub struct GraphDataset {
    pub name: String,
    pub task: Task,
    graphs: Vec<Graph>,
}

impl GraphDataset {
    pub fn new(name: impl Into<String>, task: Task, graphs: Vec<Graph>) -> Result<Self> {
        if let Some(first) = graphs.first() {
            let (fn_, fe) = (first.node_features.cols(), first.edge_features.cols());
            for (i, g) in graphs.iter().enumerate() {
                if g.node_features.cols() != fn_ || g.edge_features.cols() != fe {
                    return Err(Error::Schema(format!(
                        "graph {i} has feature widths ({}, {}), expected ({fn_}, {fe})",
                        g.node_features.cols(),
                        g.edge_features.cols()
                    )));
                }
                match (task, g.label()) {
                    (Task::Classification { num_classes }, Some(Label::Class(c))) if *c >= num_classes => {
                        return Err(Error::Schema(format!(
                            "graph {i} label {c} outside [0, {num_classes})"
                        )));
                    }
                    (Task::Regression { dim }, Some(Label::Values(v))) if v.len() != dim => {
                        return Err(Error::Schema(format!(
                            "graph {i} target has {} values, expected {dim}",
                            v.len()
                        )));
                    }
                    _ => {}
                }
            }
        }
        Ok(Self {
            name: name.into(),
            task,
            graphs,
        })
    }

    pub fn graphs(&self) -> &[Graph] {
        &self.graphs
    }

    pub fn len(&self) -> usize {
        self.graphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graphs.is_empty()
    }

    pub fn node_feature_dim(&self) -> usize {
        self.graphs.first().map_or(1, |g| g.node_features.cols())
    }

    pub fn edge_feature_dim(&self) -> usize {
        self.graphs.first().map_or(1, |g| g.edge_features.cols())
    }

    /// Class index per graph; errors when any graph lacks a class label.
    pub fn class_labels(&self) -> Result<Vec<usize>> {
        self.graphs
            .iter()
            .enumerate()
            .map(|(i, g)| match g.label() {
                Some(Label::Class(c)) => Ok(*c),
                _ => Err(Error::Schema(format!("graph {i} has no class label"))),
            })
            .collect()
    }

    /// Real-valued targets per graph.
    pub fn regression_targets(&self) -> Result<Vec<Vec<f64>>> {
        self.graphs
            .iter()
            .enumerate()
            .map(|(i, g)| match g.label() {
                Some(Label::Values(v)) => Ok(v.clone()),
                Some(Label::Class(c)) => Ok(vec![*c as f64]),
                None => Err(Error::Schema(format!("graph {i} has no target"))),
            })
            .collect()
    }

    /// Dataset restricted to the given graph indices.
    pub fn subset(&self, idx: &[usize]) -> GraphDataset {
        GraphDataset {
            name: self.name.clone(),
            task: self.task,
            graphs: idx.iter().map(|&i| self.graphs[i].clone()).collect(),
        }
    }
}

/// Descriptive statistics of a dataset.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GraphStats {
    pub num_graphs: usize,
    pub num_classes: Option<usize>,
    pub avg_nodes: f64,
    pub avg_edges: f64,
}

pub fn graph_stats(ds: &GraphDataset) -> Result<GraphStats> {
    if ds.is_empty() {
        return Err(Error::InvalidArgument("graph_stats on an empty dataset".into()));
    }
    let n = ds.len() as f64;
    let nodes: usize = ds.graphs.iter().map(Graph::num_nodes).sum();
    let edges: usize = ds.graphs.iter().map(Graph::num_edges).sum();
    Ok(GraphStats {
        num_graphs: ds.len(),
        num_classes: match ds.task {
            Task::Classification { num_classes } => Some(num_classes),
            Task::Regression { .. } => None,
        },
        avg_nodes: nodes as f64 / n,
        avg_edges: edges as f64 / n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k3() -> Graph {
        Graph::from_edges(3, vec![(0, 1), (1, 2), (0, 2)]).unwrap()
    }

    #[test]
    fn rejects_invalid_edges() {
        assert!(Graph::from_edges(3, vec![(5, 2)]).is_err());
        assert!(Graph::from_edges(3, vec![(1, 1)]).is_err());
        assert!(Graph::from_edges(3, vec![(0, 1), (1, 0)]).is_err());
    }

    #[test]
    fn rejects_feature_row_mismatch() {
        let r = Graph::new(3, vec![(0, 1)], Tensor::zeros(2, 1), Tensor::zeros(1, 1), None);
        assert!(r.is_err());
        let r = Graph::new(3, vec![(0, 1)], Tensor::zeros(3, 1), Tensor::zeros(2, 1), None);
        assert!(r.is_err());
    }

    #[test]
    fn adjacency_is_symmetric() {
        let a = k3().adjacency();
        assert_eq!(a, a.transpose());
        assert_eq!(a.data().iter().sum::<f64>(), 6.0);
    }

    #[test]
    fn induced_subgraph_keeps_internal_edges() {
        let p4 = Graph::from_edges(4, vec![(0, 1), (1, 2), (2, 3)]).unwrap();
        let s = p4.induced_subgraph(&[1, 2, 3]).unwrap();
        assert_eq!(s.num_edges(), 2);
        assert!(s.has_edge(0, 1) && s.has_edge(1, 2));
    }

    #[test]
    fn stats_examples() {
        let ds = GraphDataset::new("k3", Task::Classification { num_classes: 1 }, vec![k3()]).unwrap();
        let s = graph_stats(&ds).unwrap();
        assert_eq!((s.avg_nodes, s.avg_edges), (3.0, 3.0));

        let two = vec![
            Graph::from_edges(2, vec![(0, 1)]).unwrap(),
            Graph::from_edges(4, vec![]).unwrap(),
        ];
        let ds = GraphDataset::new("two", Task::Regression { dim: 1 }, two).unwrap();
        assert_eq!(graph_stats(&ds).unwrap().avg_nodes, 3.0);

        let empty = GraphDataset::new("e", Task::Regression { dim: 1 }, vec![]).unwrap();
        assert!(graph_stats(&empty).is_err());
    }

    #[test]
    fn dataset_rejects_mixed_widths_and_bad_labels() {
        let a = Graph::from_edges(2, vec![(0, 1)]).unwrap();
        let b = Graph::new(2, vec![], Tensor::zeros(2, 3), Tensor::zeros(0, 1), None).unwrap();
        assert!(GraphDataset::new("x", Task::Regression { dim: 1 }, vec![a.clone(), b]).is_err());
        let bad = a.with_label(Label::Class(2));
        assert!(GraphDataset::new("x", Task::Classification { num_classes: 2 }, vec![bad]).is_err());
    }
}
