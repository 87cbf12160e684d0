//! Compares the hyperbola-coordinate objective with plain latent regression
//! and Poincaré distance, at full and reduced width, by linear-probe accuracy.
//!
//! Usage: `distance_ablation [epochs] [runs]`

use graph_jepa::graph::toy_dataset;
use graph_jepa::jepa::{LossKind, TrainConfig};
use graph_jepa::probe::{pretrain_and_probe, ProbeConfig};

fn main() -> graph_jepa::Result<()> {
    let arg = |i: usize, default: usize| std::env::args().nth(i).and_then(|s| s.parse().ok()).unwrap_or(default);
    let (epochs, runs) = (arg(1, 40), arg(2, 2));
    let ds = toy_dataset(120, 1);
    let probe = ProbeConfig {
        folds: 5,
        runs,
        ..ProbeConfig::default()
    };
    println!("{:<10} {:>4} {:>9} {:>7}", "loss", "d", "accuracy", "std");
    for loss_kind in [LossKind::Hyperbola, LossKind::Euclidean, LossKind::Poincare] {
        for d in [32, 8] {
            let cfg = TrainConfig {
                epochs,
                loss_kind,
                d,
                p: 6,
                m: 3,
                k: 8,
                batch_graphs: 24,
                ..TrainConfig::default()
            };
            let report = pretrain_and_probe(&ds, &cfg, &probe, false)?;
            println!("{:<10} {:>4} {:>9.4} {:>7.4}", loss_kind.to_string(), d, report.mean, report.std);
        }
    }
    Ok(())
}
