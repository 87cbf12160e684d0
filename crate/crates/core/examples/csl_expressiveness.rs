//! Two families of circular skip-link graphs that 1-WL cannot tell apart,
//! pretrained without labels and then separated by a linear probe.
//!
//! Usage: `csl_expressiveness [seeds] [epochs] [patches]`

use graph_jepa::graph::{csl, csl_pair_dataset, wl1_color_histogram};
use graph_jepa::jepa::TrainConfig;
use graph_jepa::probe::{pretrain_and_probe, ProbeConfig};

fn main() -> graph_jepa::Result<()> {
    let arg = |i: usize, default: usize| std::env::args().nth(i).and_then(|s| s.parse().ok()).unwrap_or(default);
    let (seeds, epochs, p) = (arg(1, 3), arg(2, 20), arg(3, 8));

    let (a, b) = (csl(41, 2)?, csl(41, 3)?);
    println!("1-WL histograms equal: {}", wl1_color_histogram(&a, 10) == wl1_color_histogram(&b, 10));

    let ds = csl_pair_dataset(41, 2, 3, 100, 7)?;
    let mut accs = Vec::new();
    for seed in 0..seeds as u64 {
        let cfg = TrainConfig {
            epochs,
            p,
            m: 3,
            k: 15,
            d: 128,
            batch_graphs: 20,
            seed,
            ..TrainConfig::default()
        };
        let start = std::time::Instant::now();
        let probe = ProbeConfig {
            runs: 1,
            seed,
            ..ProbeConfig::default()
        };
        let report = pretrain_and_probe(&ds, &cfg, &probe, false)?;
        println!("seed {seed}: accuracy {:.3} ± {:.3} ({:.1?})", report.mean, report.std, start.elapsed());
        accs.push(report.mean);
    }
    println!("mean accuracy over seeds: {:.3}", accs.iter().sum::<f64>() / accs.len() as f64);
    Ok(())
}
