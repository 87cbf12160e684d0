//! Random-walk return probabilities for nodes and patches of a small graph.

use graph_jepa::graph::Graph;
use graph_jepa::partition::{expand_one_hop, partition_multilevel};
use graph_jepa::posenc::{patch_pe, rwse_nodes, PeKind};

fn main() -> graph_jepa::Result<()> {
    // Two triangles joined by a path.
    let g = Graph::from_edges(8, vec![(0, 1), (1, 2), (2, 0), (2, 3), (3, 4), (4, 5), (5, 6), (6, 7), (7, 5)])?;
    let k = 6;
    let rwse = rwse_nodes(&g, k)?;
    println!("node encodings (steps 1..={k}):");
    for v in 0..g.num_nodes() {
        let row: Vec<String> = rwse.per_node.row_slice(v).iter().map(|x| format!("{x:.3}")).collect();
        println!("  {v}: {}", row.join(" "));
    }

    let ps = expand_one_hop(&g, &partition_multilevel(&g, 2, 0)?)?;
    for kind in [PeKind::NodeMax, PeKind::RelativePatch] {
        let pe = patch_pe(&g, &ps, kind, k)?;
        println!("patch encodings ({kind}):");
        for i in 0..pe.per_patch.rows() {
            let row: Vec<String> = pe.per_patch.row_slice(i).iter().map(|x| format!("{x:.3}")).collect();
            println!("  {i}: {}", row.join(" "));
        }
    }
    Ok(())
}
