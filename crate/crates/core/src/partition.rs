//! Graph partitioning into patches and one-hop patch expansion.
//!
//! The multilevel partitioner coarsens by heavy-edge matching, grows an
//! initial partition greedily on the coarsest graph and then refines
//! boundary vertices level by level while projecting back.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::graph::Graph;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PartitionMethod {
    #[serde(rename = "metis")]
    Multilevel,
    Random,
}

impl std::str::FromStr for PartitionMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "metis" | "multilevel" => Ok(Self::Multilevel),
            "random" => Ok(Self::Random),
            other => Err(Error::InvalidArgument(format!("unknown partition method '{other}'"))),
        }
    }
}

impl std::fmt::Display for PartitionMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Multilevel => "metis",
            Self::Random => "random",
        })
    }
}

/// One patch: original node ids (core nodes first) and the induced graph.
#[derive(Clone, Debug)]
pub struct Subgraph {
    pub node_ids: Vec<usize>,
    pub local_graph: Graph,
    pub core_size: usize,
}

impl Subgraph {
    pub fn core_nodes(&self) -> &[usize] {
        &self.node_ids[..self.core_size]
    }
}

#[derive(Clone, Debug)]
pub struct PatchSet {
    patches: Vec<Subgraph>,
    assignment: Vec<usize>,
    expanded: bool,
}

impl PatchSet {
    /// Builds core (unexpanded) patches from a node-to-part map.
    pub fn from_assignment(g: &Graph, assignment: Vec<usize>, p: usize) -> Result<Self> {
        if assignment.len() != g.num_nodes() {
            return Err(Error::InvalidArgument(format!(
                "assignment covers {} nodes, graph has {}",
                assignment.len(),
                g.num_nodes()
            )));
        }
        let mut members = vec![Vec::new(); p];
        for (v, &part) in assignment.iter().enumerate() {
            if part >= p {
                return Err(Error::InvalidArgument(format!("node {v} assigned to part {part} >= {p}")));
            }
            members[part].push(v);
        }
        if let Some(empty) = members.iter().position(Vec::is_empty) {
            return Err(Error::InvalidArgument(format!("part {empty} is empty")));
        }
        let patches = members
            .into_iter()
            .map(|nodes| {
                let local_graph = g.induced_subgraph(&nodes)?;
                Ok(Subgraph {
                    core_size: nodes.len(),
                    node_ids: nodes,
                    local_graph,
                })
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            patches,
            assignment,
            expanded: false,
        })
    }

    pub fn patches(&self) -> &[Subgraph] {
        &self.patches
    }

    pub fn num_patches(&self) -> usize {
        self.patches.len()
    }

    /// Part index of every original node (core membership).
    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn is_expanded(&self) -> bool {
        self.expanded
    }

    pub fn part_sizes(&self) -> Vec<usize> {
        self.patches.iter().map(|s| s.core_size).collect()
    }
}

/// Allowed part sizes for `n` nodes in `p` parts: roughly ±30% of `n/p`,
/// widened to the nearest feasible integers.
pub fn balance_bounds(n: usize, p: usize) -> (usize, usize) {
    let ideal = n as f64 / p as f64;
    let ceil = n.div_ceil(p);
    let floor = n / p;
    let hi = ceil.max((1.3 * ideal).floor() as usize);
    let lo = ((0.7 * ideal).ceil() as usize).min(floor).max(1);
    (lo, hi)
}

/// Number of edges whose endpoints lie in different parts.
pub fn edge_cut(g: &Graph, ps: &PatchSet) -> usize {
    let a = ps.assignment();
    g.edges().iter().filter(|&&(u, v)| a[u] != a[v]).count()
}

/// Adds every original-graph neighbor of each patch's core nodes.
pub fn expand_one_hop(g: &Graph, ps: &PatchSet) -> Result<PatchSet> {
    let mut in_patch = vec![false; g.num_nodes()];
    let patches = ps
        .patches()
        .iter()
        .map(|sg| {
            let core = sg.core_nodes();
            for &v in core {
                in_patch[v] = true;
            }
            let mut extra: Vec<usize> = Vec::new();
            for &v in core {
                for &u in g.neighbors(v) {
                    if !in_patch[u] {
                        in_patch[u] = true;
                        extra.push(u);
                    }
                }
            }
            extra.sort_unstable();
            let mut nodes = core.to_vec();
            nodes.extend(extra);
            for &v in &nodes {
                in_patch[v] = false;
            }
            let local_graph = g.induced_subgraph(&nodes)?;
            Ok(Subgraph {
                node_ids: nodes,
                local_graph,
                core_size: sg.core_size,
            })
        })
        .collect::<Result<_>>()?;
    Ok(PatchSet {
        patches,
        assignment: ps.assignment.clone(),
        expanded: true,
    })
}

fn check_parts(g: &Graph, p: usize, min_p: usize) -> Result<()> {
    if p < min_p {
        return Err(Error::InvalidArgument(format!("need at least {min_p} parts, got {p}")));
    }
    if p > g.num_nodes() {
        return Err(Error::InvalidArgument(format!(
            "cannot split {} nodes into {p} non-empty parts",
            g.num_nodes()
        )));
    }
    Ok(())
}

pub fn partition(g: &Graph, p: usize, method: PartitionMethod, seed: u64) -> Result<PatchSet> {
    match method {
        PartitionMethod::Multilevel => partition_multilevel(g, p, seed),
        PartitionMethod::Random => partition_random(g, p, seed),
    }
}

/// Uniformly random assignment conditioned on every part being non-empty.
pub fn partition_random(g: &Graph, p: usize, seed: u64) -> Result<PatchSet> {
    check_parts(g, p, 1)?;
    let n = g.num_nodes();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // q[r][e]: probability that r more uniform draws cover the p - e unused parts.
    let mut q = vec![vec![0.0f64; p + 1]; n + 1];
    q[0][p] = 1.0;
    for r in 1..=n {
        for e in 0..=p {
            let stay = e as f64 / p as f64 * q[r - 1][e];
            let grow = if e < p { (p - e) as f64 / p as f64 * q[r - 1][e + 1] } else { 0.0 };
            q[r][e] = stay + grow;
        }
    }
    let mut unused: Vec<usize> = (0..p).collect();
    let mut used: Vec<usize> = Vec::with_capacity(p);
    let mut assignment = vec![0; n];
    for (v, slot) in assignment.iter_mut().enumerate() {
        let r = n - v;
        let e = used.len();
        let p_stay = e as f64 / p as f64 * q[r - 1][e] / q[r][e];
        if e > 0 && rng.gen::<f64>() < p_stay {
            *slot = used[rng.gen_range(0..e)];
        } else {
            let part = unused.swap_remove(rng.gen_range(0..unused.len()));
            used.push(part);
            *slot = part;
        }
    }
    PatchSet::from_assignment(g, assignment, p)
}

/// Uniformly random assignment among those whose part sizes all lie within
/// [`balance_bounds`].
pub fn partition_random_balanced(g: &Graph, p: usize, seed: u64) -> Result<PatchSet> {
    check_parts(g, p, 1)?;
    let n = g.num_nodes();
    let (lo, hi) = balance_bounds(n, p);
    let ln_fact: Vec<f64> = std::iter::once(0.0)
        .chain((1..=n).scan(0.0, |acc, i| {
            *acc += (i as f64).ln();
            Some(*acc)
        }))
        .collect();
    let ln_choose = |r: usize, s: usize| ln_fact[r] - ln_fact[s] - ln_fact[r - s];
    // ways[j][r]: log count of ways to place r labeled nodes into parts j..p.
    let mut ways = vec![vec![f64::NEG_INFINITY; n + 1]; p + 1];
    ways[p][0] = 0.0;
    for j in (0..p).rev() {
        for r in 0..=n {
            let terms: Vec<f64> = (lo..=hi.min(r)).map(|s| ln_choose(r, s) + ways[j + 1][r - s]).collect();
            ways[j][r] = log_sum_exp(&terms);
        }
    }
    if ways[0][n] == f64::NEG_INFINITY {
        return Err(Error::InvalidArgument(format!("no balanced split of {n} nodes into {p} parts")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sizes = Vec::with_capacity(p);
    let mut r = n;
    for j in 0..p {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        let options: Vec<usize> = (lo..=hi.min(r)).filter(|&s| ways[j + 1][r - s] > f64::NEG_INFINITY).collect();
        let mut pick = *options.last().expect("feasible");
        for &s in &options {
            acc += (ln_choose(r, s) + ways[j + 1][r - s] - ways[j][r]).exp();
            if u < acc {
                pick = s;
                break;
            }
        }
        sizes.push(pick);
        r -= pick;
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut assignment = vec![0; n];
    let mut at = 0;
    for (part, &s) in sizes.iter().enumerate() {
        for &v in &order[at..at + s] {
            assignment[v] = part;
        }
        at += s;
    }
    PatchSet::from_assignment(g, assignment, p)
}

fn log_sum_exp(terms: &[f64]) -> f64 {
    let top = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return top;
    }
    top + terms.iter().map(|t| (t - top).exp()).sum::<f64>().ln()
}

/// Edge cut before and after each boundary refinement pass, at every level.
#[derive(Clone, Debug, Default)]
pub struct RefineTrace {
    pub passes: Vec<(usize, usize)>,
    pub levels: usize,
}

pub fn partition_multilevel(g: &Graph, p: usize, seed: u64) -> Result<PatchSet> {
    partition_multilevel_traced(g, p, seed).map(|(ps, _)| ps)
}

pub fn partition_multilevel_traced(g: &Graph, p: usize, seed: u64) -> Result<(PatchSet, RefineTrace)> {
    check_parts(g, p, 2)?;
    let n = g.num_nodes();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bounds = balance_bounds(n, p);
    let coarse_target = (2 * p).max(16);
    let max_vw = ((1.5 * n as f64 / coarse_target as f64).ceil() as usize).max(2);

    let mut levels = vec![WGraph::from_graph(g)];
    let mut maps: Vec<Vec<usize>> = Vec::new();
    while levels.last().map_or(0, WGraph::len) > coarse_target {
        let fine = levels.last().expect("at least one level");
        let (coarse, cmap) = fine.coarsen(&mut rng, max_vw);
        if coarse.len() * 20 > fine.len() * 19 {
            break;
        }
        maps.push(cmap);
        levels.push(coarse);
    }

    let mut trace = RefineTrace {
        levels: levels.len(),
        ..RefineTrace::default()
    };
    let coarsest = levels.last().expect("at least one level");
    let mut best: Option<(usize, Vec<usize>, Vec<(usize, usize)>)> = None;
    for _ in 0..4 {
        let mut part = coarsest.grow_initial(p, bounds, &mut rng);
        coarsest.balance(&mut part, p, bounds);
        let mut passes = Vec::new();
        coarsest.refine(&mut part, p, bounds, &mut rng, &mut passes);
        let cut = coarsest.cut(&part);
        if best.as_ref().map_or(true, |b| cut < b.0) {
            best = Some((cut, part, passes));
        }
    }
    let (_, mut part, passes) = best.expect("four trials ran");
    trace.passes.extend(passes);

    for lvl in (0..maps.len()).rev() {
        let cmap = &maps[lvl];
        part = cmap.iter().map(|&c| part[c]).collect();
        let fine = &levels[lvl];
        fine.balance(&mut part, p, bounds);
        fine.refine(&mut part, p, bounds, &mut rng, &mut trace.passes);
    }
    Ok((PatchSet::from_assignment(g, part, p)?, trace))
}

/// Vertex- and edge-weighted graph used during coarsening.
struct WGraph {
    vw: Vec<usize>,
    adj: Vec<Vec<(usize, usize)>>,
}

impl WGraph {
    fn from_graph(g: &Graph) -> Self {
        Self {
            vw: vec![1; g.num_nodes()],
            adj: (0..g.num_nodes())
                .map(|v| g.neighbors(v).iter().map(|&u| (u, 1)).collect())
                .collect(),
        }
    }

    fn len(&self) -> usize {
        self.vw.len()
    }

    fn coarsen(&self, rng: &mut ChaCha8Rng, max_vw: usize) -> (WGraph, Vec<usize>) {
        const FREE: usize = usize::MAX;
        let n = self.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);
        let mut mate = vec![FREE; n];
        for &v in &order {
            if mate[v] != FREE {
                continue;
            }
            let mut pick = v;
            let mut heaviest = 0;
            for &(u, w) in &self.adj[v] {
                if mate[u] == FREE && u != v && w > heaviest && self.vw[u] + self.vw[v] <= max_vw {
                    pick = u;
                    heaviest = w;
                }
            }
            mate[v] = pick;
            mate[pick] = v;
        }
        let mut cmap = vec![FREE; n];
        let mut next = 0;
        for &v in &order {
            if cmap[v] == FREE {
                cmap[v] = next;
                cmap[mate[v]] = next;
                next += 1;
            }
        }
        let mut vw = vec![0; next];
        let mut acc: Vec<BTreeMap<usize, usize>> = vec![BTreeMap::new(); next];
        for v in 0..n {
            let cv = cmap[v];
            vw[cv] += self.vw[v];
            for &(u, w) in &self.adj[v] {
                let cu = cmap[u];
                if cu != cv {
                    *acc[cv].entry(cu).or_insert(0) += w;
                }
            }
        }
        let adj = acc.into_iter().map(|m| m.into_iter().collect()).collect();
        (WGraph { vw, adj }, cmap)
    }

    fn cut(&self, part: &[usize]) -> usize {
        let mut cut = 0;
        for v in 0..self.len() {
            for &(u, w) in &self.adj[v] {
                if u > v && part[u] != part[v] {
                    cut += w;
                }
            }
        }
        cut
    }

    fn part_weights(&self, part: &[usize], p: usize) -> Vec<usize> {
        let mut w = vec![0; p];
        for (v, &pt) in part.iter().enumerate() {
            w[pt] += self.vw[v];
        }
        w
    }

    fn connectivity(&self, v: usize, part: &[usize], p: usize) -> Vec<usize> {
        let mut conn = vec![0; p];
        for &(u, w) in &self.adj[v] {
            conn[part[u]] += w;
        }
        conn
    }

    /// Greedy graph growing, one part at a time, always leaving at least one
    /// vertex for every part still to be grown.
    fn grow_initial(&self, p: usize, bounds: (usize, usize), rng: &mut ChaCha8Rng) -> Vec<usize> {
        const NONE: usize = usize::MAX;
        let n = self.len();
        let mut part = vec![NONE; n];
        let mut remaining_w: usize = self.vw.iter().sum();
        let mut unassigned = n;
        for k in 0..p - 1 {
            let target = remaining_w as f64 / (p - k) as f64;
            let free: Vec<usize> = (0..n).filter(|&v| part[v] == NONE).collect();
            let seed = free[rng.gen_range(0..free.len())];
            part[seed] = k;
            unassigned -= 1;
            let mut wk = self.vw[seed];
            while (wk as f64) < target && unassigned > p - k - 1 {
                let mut best: Option<(i64, usize)> = None;
                for v in 0..n {
                    if part[v] != NONE || wk + self.vw[v] > bounds.1 {
                        continue;
                    }
                    let (mut inside, mut outside) = (0i64, 0i64);
                    for &(u, w) in &self.adj[v] {
                        if part[u] == k {
                            inside += w as i64;
                        } else if part[u] == NONE {
                            outside += w as i64;
                        }
                    }
                    if inside == 0 {
                        continue;
                    }
                    let gain = inside - outside;
                    if best.map_or(true, |(g, _)| gain > g) {
                        best = Some((gain, v));
                    }
                }
                let v = match best {
                    Some((_, v)) => v,
                    None => {
                        let fits: Vec<usize> = (0..n)
                            .filter(|&v| part[v] == NONE && wk + self.vw[v] <= bounds.1)
                            .collect();
                        if fits.is_empty() {
                            break;
                        }
                        fits[rng.gen_range(0..fits.len())]
                    }
                };
                let after = (wk + self.vw[v]) as f64;
                if after - target > target - wk as f64 {
                    break;
                }
                part[v] = k;
                wk += self.vw[v];
                unassigned -= 1;
            }
            remaining_w -= wk;
        }
        for slot in part.iter_mut().filter(|s| **s == NONE) {
            *slot = p - 1;
        }
        part
    }

    /// Moves vertices until all part weights sit inside `bounds`, preferring
    /// moves that hurt the cut least. Best effort on coarse levels.
    fn balance(&self, part: &mut [usize], p: usize, (lo, hi): (usize, usize)) {
        let mut w = self.part_weights(part, p);
        for _ in 0..self.len() * p {
            let over = (0..p).filter(|&a| w[a] > hi).max_by_key(|&a| w[a]);
            let under = (0..p).filter(|&b| w[b] < lo).min_by_key(|&b| w[b]);
            let mut best: Option<(i64, usize, usize)> = None;
            for v in 0..self.len() {
                let a = part[v];
                let from_ok = match (over, under) {
                    (Some(o), _) => a == o,
                    (None, Some(_)) => w[a] >= lo + self.vw[v],
                    (None, None) => return,
                };
                if !from_ok {
                    continue;
                }
                let conn = self.connectivity(v, part, p);
                for b in 0..p {
                    if b == a || w[b] + self.vw[v] > hi {
                        continue;
                    }
                    if over.is_none() && Some(b) != under {
                        continue;
                    }
                    let gain = conn[b] as i64 - conn[a] as i64;
                    if best.map_or(true, |(g, _, _)| gain > g) {
                        best = Some((gain, v, b));
                    }
                }
            }
            match best {
                Some((_, v, b)) => {
                    w[part[v]] -= self.vw[v];
                    w[b] += self.vw[v];
                    part[v] = b;
                }
                None => return,
            }
        }
    }

    /// Boundary refinement: move a vertex only when it strictly lowers the
    /// cut and keeps both parts inside `bounds`.
    fn refine(
        &self,
        part: &mut [usize],
        p: usize,
        (lo, hi): (usize, usize),
        rng: &mut ChaCha8Rng,
        trace: &mut Vec<(usize, usize)>,
    ) {
        let mut w = self.part_weights(part, p);
        let mut order: Vec<usize> = (0..self.len()).collect();
        for _pass in 0..10 {
            let before = self.cut(part);
            order.shuffle(rng);
            let mut moved = 0;
            for &v in &order {
                let a = part[v];
                if self.adj[v].iter().all(|&(u, _)| part[u] == a) || w[a] < lo + self.vw[v] {
                    continue;
                }
                let conn = self.connectivity(v, part, p);
                let mut best: Option<(usize, usize)> = None;
                for b in 0..p {
                    if b != a && conn[b] > conn[a] && w[b] + self.vw[v] <= hi {
                        let gain = conn[b] - conn[a];
                        if best.map_or(true, |(g, _)| gain > g) {
                            best = Some((gain, b));
                        }
                    }
                }
                if let Some((_, b)) = best {
                    w[a] -= self.vw[v];
                    w[b] += self.vw[v];
                    part[v] = b;
                    moved += 1;
                }
            }
            trace.push((before, self.cut(part)));
            if moved == 0 {
                break;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::csl;

    fn path(n: usize) -> Graph {
        Graph::from_edges(n, (0..n - 1).map(|i| (i, i + 1)).collect()).unwrap()
    }

    fn k4() -> Graph {
        Graph::from_edges(4, vec![(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]).unwrap()
    }

    #[test]
    fn path_of_four_splits_in_the_middle() {
        let g = path(4);
        for seed in 0..10 {
            let ps = partition_multilevel(&g, 2, seed).unwrap();
            assert_eq!(edge_cut(&g, &ps), 1);
            let a = ps.assignment();
            assert!(a[0] == a[1] && a[2] == a[3] && a[1] != a[2]);
        }
    }

    #[test]
    fn complete_graph_balanced_split_cuts_four() {
        let g = k4();
        let ps = partition_multilevel(&g, 2, 0).unwrap();
        assert_eq!(ps.part_sizes(), vec![2, 2]);
        assert_eq!(edge_cut(&g, &ps), 4);
        let ex = expand_one_hop(&g, &ps).unwrap();
        assert!(ex.patches().iter().all(|s| s.node_ids.len() == 4 && s.local_graph.num_edges() == 6));
    }

    #[test]
    fn too_many_parts_is_rejected() {
        let g = path(5);
        assert!(partition_multilevel(&g, 6, 0).is_err());
        assert!(partition_multilevel(&g, 1, 0).is_err());
        assert!(partition_random(&g, 6, 0).is_err());
    }

    #[test]
    fn random_partition_small_cases() {
        let g = path(4);
        let ps = partition_random(&g, 4, 7).unwrap();
        assert!(ps.part_sizes().iter().all(|&s| s == 1));
        let g3 = path(3);
        let mut sizes = partition_random(&g3, 2, 1).unwrap().part_sizes();
        sizes.sort_unstable();
        assert_eq!(sizes, vec![1, 2]);
        let big = Graph::from_edges(100, vec![]).unwrap();
        let a = partition_random(&big, 2, 1).unwrap();
        let b = partition_random(&big, 2, 2).unwrap();
        assert_ne!(a.assignment(), b.assignment());
    }

    #[test]
    fn balanced_random_is_uniform_over_allowed_splits() {
        // N=5, p=2 allows sizes {2,3} only: 2 * C(5,2) = 20 assignments.
        let g = path(5);
        let mut counts = std::collections::HashMap::new();
        for seed in 0..4000 {
            let ps = partition_random_balanced(&g, 2, seed).unwrap();
            let sizes = ps.part_sizes();
            assert!(sizes.iter().all(|&s| s == 2 || s == 3));
            *counts.entry(ps.assignment().to_vec()).or_insert(0usize) += 1;
        }
        assert_eq!(counts.len(), 20);
        assert!(counts.values().all(|&c| (120..=280).contains(&c)), "{counts:?}");
    }

    #[test]
    fn path_expansion_adds_boundary_neighbors() {
        let g = path(4);
        let ps = PatchSet::from_assignment(&g, vec![0, 0, 1, 1], 2).unwrap();
        assert_eq!(edge_cut(&g, &ps), 1);
        let ex = expand_one_hop(&g, &ps).unwrap();
        let mut a = ex.patches()[0].node_ids.clone();
        let mut b = ex.patches()[1].node_ids.clone();
        a.sort_unstable();
        b.sort_unstable();
        assert_eq!((a, b), (vec![0, 1, 2], vec![1, 2, 3]));
        assert!(ex.patches().iter().all(|s| s.local_graph.num_edges() == 2));
        assert_eq!(ex.patches()[0].core_size, 2);
    }

    #[test]
    fn edgeless_singletons_stay_singletons() {
        let g = Graph::from_edges(3, vec![]).unwrap();
        let ps = PatchSet::from_assignment(&g, vec![0, 1, 2], 3).unwrap();
        let ex = expand_one_hop(&g, &ps).unwrap();
        assert!(ex.patches().iter().all(|s| s.node_ids.len() == 1));
        let single = PatchSet::from_assignment(&g, vec![0, 0, 0], 1).unwrap();
        assert_eq!(edge_cut(&g, &single), 0);
    }

    #[test]
    fn larger_graphs_respect_balance_and_coarsen() {
        let g = csl(41, 3).unwrap();
        let (ps, trace) = partition_multilevel_traced(&g, 4, 3).unwrap();
        let (lo, hi) = balance_bounds(41, 4);
        assert!(ps.part_sizes().iter().all(|&s| s >= lo && s <= hi));
        assert!(trace.levels >= 2);
        assert!(trace.passes.iter().all(|(b, a)| a <= b));
    }

    #[test]
    fn bounds_are_feasible() {
        for n in 1..200 {
            for p in 1..=n.min(40) {
                let (lo, hi) = balance_bounds(n, p);
                assert!(lo >= 1 && lo * p <= n && hi * p >= n, "n={n} p={p}");
            }
        }
    }
}
