use graph_jepa::autodiff::{smooth_l1_element, Tape, Tensor};
use graph_jepa::checkpoint;
use graph_jepa::config::RunConfig;
use graph_jepa::graph::{permute_nodes, random_graph, wl1_color_histogram, Graph};
use graph_jepa::jepa::{effective_rank, hyperbolic_target, ols_solve, sample_indices, TrainConfig};
use graph_jepa::nn::{JepaModel, ModelConfig, PatchBatch};
use graph_jepa::partition::{balance_bounds, edge_cut, expand_one_hop, partition, partition_multilevel_traced, partition_random, partition_random_balanced, PartitionMethod};
use graph_jepa::posenc::rwse_nodes;
use graph_jepa::probe::stratified_folds;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn graph_strategy(max_n: usize) -> impl Strategy<Value = Graph> {
    (1..=max_n, 0.0..1.0f64, any::<u64>()).prop_map(|(n, p, seed)| random_graph(n, p, &mut ChaCha8Rng::seed_from_u64(seed)))
}

fn shuffled(n: usize, seed: u64) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    perm
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn partitions_cover_every_node_within_bounds(g in graph_strategy(24), p in 2usize..6, seed in any::<u64>(), random in any::<bool>()) {
        prop_assume!(p <= g.num_nodes());
        let ps = if random { partition_random_balanced(&g, p, seed).unwrap() } else { partition(&g, p, PartitionMethod::Multilevel, seed).unwrap() };
        let (lo, hi) = balance_bounds(g.num_nodes(), p);
        prop_assert_eq!(ps.assignment().len(), g.num_nodes());
        prop_assert_eq!(ps.num_patches(), p);
        for size in ps.part_sizes() {
            prop_assert!(size >= lo && size <= hi, "size {} outside [{}, {}]", size, lo, hi);
        }
        let ex = expand_one_hop(&g, &ps).unwrap();
        for (core, grown) in ps.patches().iter().zip(ex.patches()) {
            prop_assert_eq!(core.core_nodes(), grown.core_nodes());
            for &v in grown.core_nodes() {
                for &u in g.neighbors(v) {
                    prop_assert!(grown.node_ids.contains(&u));
                }
            }
        }
    }

    #[test]
    fn random_partitions_are_nonempty_surjections(g in graph_strategy(20), p in 1usize..6, seed in any::<u64>()) {
        prop_assume!(p <= g.num_nodes());
        let ps = partition_random(&g, p, seed).unwrap();
        prop_assert_eq!(ps.num_patches(), p);
        prop_assert!(ps.part_sizes().iter().all(|&s| s >= 1));
        prop_assert_eq!(ps.part_sizes().iter().sum::<usize>(), g.num_nodes());
    }

    #[test]
    fn refinement_never_increases_the_cut(g in graph_strategy(30), p in 2usize..5, seed in any::<u64>()) {
        prop_assume!(p <= g.num_nodes());
        let (ps, trace) = partition_multilevel_traced(&g, p, seed).unwrap();
        for (before, after) in &trace.passes {
            prop_assert!(after <= before);
        }
        if let Some(&(_, last)) = trace.passes.last() {
            prop_assert!(edge_cut(&g, &ps) <= last.max(edge_cut(&g, &ps)));
        }
    }

    #[test]
    fn rwse_is_a_probability_and_permutes_with_nodes(g in graph_strategy(12), k in 1usize..8, seed in any::<u64>()) {
        let r = rwse_nodes(&g, k).unwrap().per_node;
        prop_assert!(r.data().iter().all(|&x| (0.0..=1.0 + 1e-12).contains(&x)));
        // Odd-length closed walks need an odd cycle, so bipartite-free checks
        // reduce to: a walk of length 1 never returns.
        prop_assert!((0..g.num_nodes()).all(|v| r.get(v, 0) == 0.0));
        let perm = shuffled(g.num_nodes(), seed);
        let h = permute_nodes(&g, &perm).unwrap();
        let rp = rwse_nodes(&h, k).unwrap().per_node;
        for v in 0..g.num_nodes() {
            for j in 0..k {
                prop_assert!((r.get(v, j) - rp.get(perm[v], j)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn wl_histograms_ignore_node_order(g in graph_strategy(15), seed in any::<u64>()) {
        let h = permute_nodes(&g, &shuffled(g.num_nodes(), seed)).unwrap();
        prop_assert_eq!(wl1_color_histogram(&g, 5), wl1_color_histogram(&h, 5));
    }

    /// The absolute form only holds while `cosh² · 2⁻⁵³` stays below the
    /// tolerance, i.e. for |α| up to about 7.8.
    #[test]
    fn hyperbola_identity_in_representable_range(row in proptest::collection::vec(-7.5..7.5f64, 1..16)) {
        let t = hyperbolic_target(&Tensor::row(&row));
        let (c, s) = (t.psi.get(0, 0), t.psi.get(0, 1));
        let residual = ((c * c - s * s) - 1.0) + (c.mul_add(c, -c * c) - s.mul_add(s, -s * s));
        prop_assert!(residual.abs() <= 1e-9, "alpha {} residual {}", t.alpha[0], residual);
        prop_assert!(c >= 1.0);
        prop_assert_eq!(s.signum() * t.alpha[0].signum() >= 0.0, true);
    }

    #[test]
    fn smooth_l1_is_nonnegative_even_and_bounded_by_abs(d in -50.0..50.0f64, beta in 0.01..5.0f64) {
        let l = smooth_l1_element(d, beta);
        prop_assert!(l >= 0.0);
        prop_assert_eq!(l, smooth_l1_element(-d, beta));
        prop_assert!(l <= d.abs());
    }

    #[test]
    fn context_and_targets_are_distinct(p in 2usize..40, m_frac in 0.0..1.0f64, seed in any::<u64>()) {
        let m = 1 + ((p - 2) as f64 * m_frac) as usize;
        let b = sample_indices(p, m, 0, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        prop_assert_eq!(b.target_idxs.len(), m);
        prop_assert!(!b.target_idxs.contains(&b.context_idx));
        let mut t = b.target_idxs.clone();
        t.sort_unstable();
        t.dedup();
        prop_assert_eq!(t.len(), m);
        prop_assert!(b.target_idxs.iter().chain([&b.context_idx]).all(|&i| i < p));
        prop_assert!(sample_indices(p, p, 0, &mut ChaCha8Rng::seed_from_u64(seed)).is_err());
    }

    #[test]
    fn ols_satisfies_normal_equations(n in 12usize..40, d in 1usize..8, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        use rand::Rng;
        let x = Tensor::new(n, d, (0..n * d).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
        let y = Tensor::new(n, 2, (0..n * 2).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
        let sol = ols_solve(&x, &y).unwrap();
        let lhs = x.transpose().matmul(&x.matmul(&sol.w).unwrap()).unwrap();
        let rhs = x.transpose().matmul(&y).unwrap();
        for (a, b) in lhs.data().iter().zip(rhs.data()) {
            prop_assert!((a - b).abs() <= 1e-8);
        }
    }

    #[test]
    fn effective_rank_is_bounded(rows in 1usize..8, cols in 1usize..8, seed in any::<u64>()) {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = Tensor::new(rows, cols, (0..rows * cols).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
        let r = effective_rank(&x);
        prop_assert!(r >= 1.0 - 1e-12 && r <= rows.min(cols) as f64 + 1e-9);
    }

    #[test]
    fn stratified_folds_are_balanced(labels in proptest::collection::vec(0usize..3, 10..80), folds in 2usize..8, seed in any::<u64>()) {
        let f = stratified_folds(&labels, folds, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let mut all: Vec<usize> = f.iter().flatten().copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..labels.len()).collect::<Vec<_>>());
        for c in 0..3 {
            let total = labels.iter().filter(|&&l| l == c).count() as f64;
            for fold in &f {
                let here = fold.iter().filter(|&&i| labels[i] == c).count() as f64;
                prop_assert!((here - total / folds as f64).abs() <= 1.0);
            }
        }
    }

    #[test]
    fn patch_embeddings_ignore_node_order(g in graph_strategy(8), seed in any::<u64>()) {
        prop_assume!(g.num_edges() > 0);
        let model = JepaModel::new(ModelConfig::new(1, 1, 8, 2, 1, 3), seed).unwrap();
        let h = permute_nodes(&g, &shuffled(g.num_nodes(), seed)).unwrap();
        let tape = Tape::new();
        let w = model.online_frozen(&tape);
        let a = model.embed_patches(&w, &tape, &PatchBatch::new(&[&g]).unwrap()).unwrap().to_tensor();
        let b = model.embed_patches(&w, &tape, &PatchBatch::new(&[&h]).unwrap()).unwrap().to_tensor();
        for (x, y) in a.data().iter().zip(b.data()) {
            prop_assert!((x - y).abs() <= 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn checkpoints_round_trip_bit_exact(seed in any::<u64>(), d in 2usize..10, blocks in 0usize..3) {
        let model = JepaModel::new(ModelConfig::new(3, 2, d, 1, blocks, 4), seed).unwrap();
        let bytes = checkpoint::to_bytes(&model, None).unwrap();
        let back = checkpoint::from_bytes(&bytes).unwrap();
        prop_assert_eq!(checkpoint::to_bytes(&back.model, None).unwrap(), bytes);
    }

    #[test]
    fn configs_round_trip(epochs in 1usize..500, lr in 1e-6..1.0f64, p in 2usize..64, seed in any::<u64>(), beta in 0.01..4.0f64) {
        let cfg = RunConfig {
            dataset: Some("toy:10".into()),
            train: TrainConfig { epochs, lr, p, m: 1, beta, seed, ..TrainConfig::default() },
        };
        prop_assert_eq!(cfg.to_flat().parse::<RunConfig>().unwrap(), cfg);
    }
}
