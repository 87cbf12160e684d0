use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Graph, GraphDataset, Label, Task};
use crate::error::{Error, Result};

/// Circular skip-link graph: an `n`-cycle plus chords `{i, i + skip}`.
pub fn csl(n: usize, skip: usize) -> Result<Graph> {
    if n < 5 || skip < 2 || 2 * skip >= n {
        return Err(Error::InvalidArgument(format!(
            "csl needs n >= 5 and 2 <= skip < n/2, got n={n} skip={skip}"
        )));
    }
    let mut edges = Vec::with_capacity(2 * n);
    for i in 0..n {
        edges.push((i, (i + 1) % n));
    }
    for i in 0..n {
        edges.push((i, (i + skip) % n));
    }
    Graph::from_edges(n, edges)
}

/// Relabels nodes so that old node `v` becomes `perm[v]`.
pub fn permute_nodes(g: &Graph, perm: &[usize]) -> Result<Graph> {
    let n = g.num_nodes();
    let mut seen = vec![false; n];
    if perm.len() != n || perm.iter().any(|&p| p >= n || std::mem::replace(&mut seen[p], true)) {
        return Err(Error::InvalidArgument("permutation is not a bijection on the node set".into()));
    }
    let mut inverse = vec![0; n];
    for (old, &new) in perm.iter().enumerate() {
        inverse[new] = old;
    }
    let edges = g.edges().iter().map(|&(u, v)| (perm[u], perm[v])).collect();
    Graph::new(
        n,
        edges,
        g.node_features().select_rows(&inverse),
        g.edge_features().clone(),
        g.label().cloned(),
    )
}

/// Erdős–Rényi graph with edge probability `p_edge`.
pub fn random_graph<R: Rng>(n: usize, p_edge: f64, rng: &mut R) -> Graph {
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen::<f64>() < p_edge {
                edges.push((u, v));
            }
        }
    }
    Graph::from_edges(n, edges).expect("generated edges are simple")
}

fn random_connected<R: Rng>(n: usize, extra_p: f64, rng: &mut R) -> Graph {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut edges = std::collections::BTreeSet::new();
    for i in 1..n {
        let j = rng.gen_range(0..i);
        let (a, b) = (order[i], order[j]);
        edges.insert((a.min(b), a.max(b)));
    }
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen::<f64>() < extra_p {
                edges.insert((u, v));
            }
        }
    }
    Graph::from_edges(n, edges.into_iter().collect()).expect("generated edges are simple")
}

/// Two-class set of connected graphs with 8 to 20 nodes: class 0 is
/// tree-like, class 1 carries extra random chords.
pub fn toy_dataset(count: usize, seed: u64) -> GraphDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let graphs = (0..count)
        .map(|i| {
            let class = i % 2;
            let n = rng.gen_range(8..=20);
            let extra = if class == 0 { 0.03 } else { 0.25 };
            random_connected(n, extra, &mut rng).with_label(Label::Class(class))
        })
        .collect();
    GraphDataset::new(format!("toy-{count}"), Task::Classification { num_classes: 2 }, graphs)
        .expect("toy graphs share feature widths")
}

/// `count` randomly relabelled CSL graphs alternating between two skip classes.
pub fn csl_pair_dataset(n: usize, skip_a: usize, skip_b: usize, count: usize, seed: u64) -> Result<GraphDataset> {
    if skip_a == skip_b {
        return Err(Error::InvalidArgument("the two skip values must differ".into()));
    }
    let bases = [csl(n, skip_a)?, csl(n, skip_b)?];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut graphs = Vec::with_capacity(count);
    for i in 0..count {
        let class = i % 2;
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng);
        graphs.push(permute_nodes(&bases[class], &perm)?.with_label(Label::Class(class)));
    }
    GraphDataset::new(
        format!("csl-{n}-{skip_a}-{skip_b}"),
        Task::Classification { num_classes: 2 },
        graphs,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csl_is_four_regular() {
        for (n, s) in [(11, 2), (41, 3), (41, 2), (9, 4)] {
            let g = csl(n, s).unwrap();
            assert_eq!(g.num_edges(), 2 * n);
            assert!((0..n).all(|v| g.degree(v) == 4));
        }
        assert!(csl(6, 3).is_err());
        assert!(csl(4, 1).is_err());
    }

    #[test]
    fn permutation_preserves_degrees() {
        let g = random_graph(9, 0.4, &mut ChaCha8Rng::seed_from_u64(3));
        let perm = vec![3, 1, 4, 0, 8, 2, 7, 6, 5];
        let h = permute_nodes(&g, &perm).unwrap();
        for v in 0..9 {
            assert_eq!(g.degree(v), h.degree(perm[v]));
        }
        assert!(permute_nodes(&g, &[0, 0, 1, 2, 3, 4, 5, 6, 7]).is_err());
    }

    #[test]
    fn toy_graphs_are_connected_and_balanced() {
        let ds = toy_dataset(20, 1);
        assert_eq!(ds.len(), 20);
        assert!(ds.graphs().iter().all(|g| g.num_components() == 1));
        let labels = ds.class_labels().unwrap();
        assert_eq!(labels.iter().filter(|&&c| c == 1).count(), 10);
    }

    #[test]
    fn csl_pairs_alternate_labels() {
        let ds = csl_pair_dataset(41, 2, 3, 6, 0).unwrap();
        assert_eq!(ds.class_labels().unwrap(), vec![0, 1, 0, 1, 0, 1]);
        assert!(csl_pair_dataset(41, 2, 2, 4, 0).is_err());
    }
}
