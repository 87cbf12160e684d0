//! Cross-validated linear probes on frozen embeddings: logistic regression
//! for class labels and ridge regression for a continuous target.

use graph_jepa::autodiff::Tensor;
use graph_jepa::graph::toy_dataset;
use graph_jepa::jepa::{embed_dataset, train, TrainConfig};
use graph_jepa::probe::{cross_validate_features, probe_targets, ProbeConfig, ProbeTargets};

fn main() -> graph_jepa::Result<()> {
    let ds = toy_dataset(100, 2);
    let cfg = TrainConfig {
        epochs: 10,
        p: 6,
        m: 3,
        k: 8,
        d: 32,
        batch_graphs: 20,
        ..TrainConfig::default()
    };
    let model = train(&ds, &cfg)?.model;
    let x = embed_dataset(&ds, &model, &cfg)?.graph;
    let probe = ProbeConfig {
        folds: 5,
        runs: 3,
        ..ProbeConfig::default()
    };

    let classes = cross_validate_features(&x, &probe_targets(&ds)?, &probe)?;
    println!(
        "classification: accuracy {:.4} ± {:.4} (majority {:.4}), lambdas {:?}",
        classes.mean,
        classes.std,
        classes.majority_baseline.unwrap_or(f64::NAN),
        classes.lambdas_used
    );

    // Edge density is not given to the model; see how much of it is linear in the embedding.
    let density: Vec<f64> = ds
        .graphs()
        .iter()
        .map(|g| {
            let n = g.num_nodes() as f64;
            2.0 * g.num_edges() as f64 / (n * (n - 1.0))
        })
        .collect();
    let values = ProbeTargets::Values(Tensor::new(density.len(), 1, density)?);
    let reg = cross_validate_features(&x, &values, &probe)?;
    println!(
        "regression: mse {:.4} ± {:.4}, mae {:.4}",
        reg.mean,
        reg.std,
        reg.mae_mean.unwrap_or(f64::NAN)
    );
    Ok(())
}
