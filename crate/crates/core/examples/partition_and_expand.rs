//! Splits a random graph into balanced patches, shows how boundary
//! refinement lowers the edge cut, then grows each patch by one hop.
//!
//! Usage: `partition_and_expand [nodes] [patches] [seed]`

use graph_jepa::graph::random_graph;
use graph_jepa::partition::{
    balance_bounds, edge_cut, expand_one_hop, partition_multilevel_traced, partition_random_balanced,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> graph_jepa::Result<()> {
    let arg = |i: usize, default: u64| std::env::args().nth(i).and_then(|s| s.parse().ok()).unwrap_or(default);
    let (n, p, seed) = (arg(1, 60) as usize, arg(2, 6) as usize, arg(3, 0));
    let g = random_graph(n, 0.08, &mut ChaCha8Rng::seed_from_u64(seed));
    let (lo, hi) = balance_bounds(n, p);
    println!("{n} nodes, {} edges, {p} patches of {lo}..={hi} nodes", g.num_edges());

    let (ps, trace) = partition_multilevel_traced(&g, p, seed)?;
    println!("multilevel: {} coarsening levels", trace.levels);
    for (pass, (before, after)) in trace.passes.iter().enumerate() {
        println!("  refinement pass {pass}: cut {before} -> {after}");
    }
    println!("  sizes {:?}, cut {}", ps.part_sizes(), edge_cut(&g, &ps));

    let random = partition_random_balanced(&g, p, seed)?;
    println!("random:     sizes {:?}, cut {}", random.part_sizes(), edge_cut(&g, &random));

    let expanded = expand_one_hop(&g, &ps)?;
    for (i, patch) in expanded.patches().iter().enumerate() {
        println!(
            "  patch {i}: {} core + {} halo nodes, {} edges",
            patch.core_size,
            patch.node_ids.len() - patch.core_size,
            patch.local_graph.num_edges()
        );
    }
    Ok(())
}
