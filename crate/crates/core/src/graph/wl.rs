use std::collections::hash_map::DefaultHasher;
use std::collections::BTreeMap;
use std::hash::{Hash, Hasher};

use super::Graph;

/// Color multiset: color id to node count.
pub type ColorHistogram = BTreeMap<u64, usize>;

fn refine(g: &Graph, colors: &[u64]) -> Vec<u64> {
    (0..g.num_nodes())
        .map(|v| {
            let mut nb: Vec<u64> = g.neighbors(v).iter().map(|&u| colors[u]).collect();
            nb.sort_unstable();
            // Fixed-key SipHash, so colors agree across graphs and runs.
            let mut h = DefaultHasher::new();
            colors[v].hash(&mut h);
            nb.hash(&mut h);
            h.finish()
        })
        .collect()
}

fn histogram(colors: &[u64]) -> ColorHistogram {
    let mut hist = ColorHistogram::new();
    for &c in colors {
        *hist.entry(c).or_insert(0) += 1;
    }
    hist
}

fn class_count(colors: &[u64]) -> usize {
    histogram(colors).len()
}

/// 1-WL refinement starting from degree colors. Runs `rounds` iterations
/// (at least one) and returns the final color multiset. Color ids are
/// comparable between graphs refined for the same number of rounds.
pub fn wl1_color_histogram(g: &Graph, rounds: usize) -> ColorHistogram {
    let mut colors: Vec<u64> = (0..g.num_nodes()).map(|v| g.degree(v) as u64).collect();
    for _ in 0..rounds.max(1) {
        colors = refine(g, &colors);
    }
    histogram(&colors)
}

/// True when 1-WL cannot separate `a` and `b` within `rounds` iterations.
/// Refinement stops early once neither graph's partition gets finer.
pub fn wl1_indistinguishable(a: &Graph, b: &Graph, rounds: usize) -> bool {
    if a.num_nodes() != b.num_nodes() {
        return false;
    }
    let mut ca: Vec<u64> = (0..a.num_nodes()).map(|v| a.degree(v) as u64).collect();
    let mut cb: Vec<u64> = (0..b.num_nodes()).map(|v| b.degree(v) as u64).collect();
    for _ in 0..rounds.max(1) {
        if histogram(&ca) != histogram(&cb) {
            return false;
        }
        let (na, nb) = (refine(a, &ca), refine(b, &cb));
        let stable = class_count(&na) == class_count(&ca) && class_count(&nb) == class_count(&cb);
        ca = na;
        cb = nb;
        if stable {
            break;
        }
    }
    histogram(&ca) == histogram(&cb)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{csl, permute_nodes};

    #[test]
    fn triangle_has_one_color() {
        let k3 = Graph::from_edges(3, vec![(0, 1), (1, 2), (0, 2)]).unwrap();
        assert_eq!(wl1_color_histogram(&k3, 3).len(), 1);
    }

    #[test]
    fn path_of_three_splits_two_one() {
        let p3 = Graph::from_edges(3, vec![(0, 1), (1, 2)]).unwrap();
        let counts: Vec<usize> = {
            let mut c: Vec<usize> = wl1_color_histogram(&p3, 2).into_values().collect();
            c.sort_unstable();
            c
        };
        assert_eq!(counts, vec![1, 2]);
    }

    #[test]
    fn csl_pair_is_indistinguishable() {
        let (a, b) = (csl(41, 2).unwrap(), csl(41, 3).unwrap());
        assert_eq!(wl1_color_histogram(&a, 5), wl1_color_histogram(&b, 5));
        assert!(wl1_indistinguishable(&a, &b, 41));
    }

    #[test]
    fn path_and_star_are_distinguished() {
        let path = Graph::from_edges(4, vec![(0, 1), (1, 2), (2, 3)]).unwrap();
        let star = Graph::from_edges(4, vec![(0, 1), (0, 2), (0, 3)]).unwrap();
        assert!(!wl1_indistinguishable(&path, &star, 4));
        let relabeled = permute_nodes(&path, &[2, 0, 3, 1]).unwrap();
        assert!(wl1_indistinguishable(&path, &relabeled, 4));
    }
}
