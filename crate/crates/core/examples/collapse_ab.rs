//! Trains the same toy model with and without a moving-average target
//! branch and prints how the embedding spread evolves.

use graph_jepa::jepa::{collapse_experiment, CollapseConfig};

fn main() -> graph_jepa::Result<()> {
    let seeds: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(5);
    let mut cfg = CollapseConfig {
        seeds: (0..seeds).collect(),
        ..CollapseConfig::default()
    };
    if let Some(lr) = std::env::args().nth(2).and_then(|s| s.parse().ok()) {
        cfg.train.lr = lr;
    }
    let report = collapse_experiment(&cfg)?;
    println!("{:>5} {:>6} {:>12} {:>12} {:>10} {:>10}", "seed", "step", "ema_std", "shared_std", "ema_psi", "sh_psi");
    for run in &report.runs {
        for ((step, a), (_, b)) in run.ema.iter().zip(&run.shared) {
            println!(
                "{:>5} {:>6} {:>12.4e} {:>12.4e} {:>10.3e} {:>10.3e}",
                run.seed, step, a.embedding_std, b.embedding_std, a.psi_std, b.psi_std
            );
        }
    }
    println!(
        "ema alive: {}/{}  shared below ema: {}/{}  shared monotone: {}/{}",
        report.ema_alive(1e-2),
        report.runs.len(),
        report.shared_below_ema(),
        report.runs.len(),
        report.shared_monotone(),
        report.runs.len()
    );
    Ok(())
}
