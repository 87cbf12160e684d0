//! Pretrains on a synthetic two-class set, saves a checkpoint, reloads it
//! and embeds the graphs.
//!
//! Usage: `pretrain_toy [epochs] [checkpoint-path]`

use graph_jepa::checkpoint;
use graph_jepa::graph::toy_dataset;
use graph_jepa::jepa::{embed_dataset, train_observed, TrainConfig};

fn main() -> graph_jepa::Result<()> {
    let epochs = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(20);
    let path = std::env::args()
        .nth(2)
        .map(std::path::PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("pretrain_toy.ckpt"));

    let ds = toy_dataset(80, 0);
    let cfg = TrainConfig {
        epochs,
        p: 6,
        m: 3,
        k: 8,
        d: 32,
        batch_graphs: 16,
        ..TrainConfig::default()
    };
    println!("{:>5} {:>10} {:>10} {:>10} {:>7}", "epoch", "loss", "target_sd", "alpha_sd", "tau");
    let out = train_observed(&ds, &cfg, |row, _| {
        println!(
            "{:>5} {:>10.5} {:>10.4} {:>10.4} {:>7.4}",
            row.epoch, row.loss, row.target_std, row.alpha_std, row.tau
        );
    })?;
    let counts = out.model.param_counts();
    println!("parameters: gnn {} encoder {} predictor {}", counts.gnn, counts.encoder, counts.predictor);

    checkpoint::save(&out.model, Some(&cfg), &path)?;
    let restored = checkpoint::load(&path)?;
    let emb = embed_dataset(&ds, &restored.model, &cfg)?;
    println!("saved {}; embeddings {:?}", path.display(), emb.graph.shape());
    Ok(())
}
