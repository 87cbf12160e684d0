use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;

fn random(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Tensor {
    Tensor::new(rows, cols, (0..rows * cols).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
}

#[test]
fn ridge_recovers_exact_linear_map() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let x = random(40, 5, &mut rng);
    let c = random(5, 2, &mut rng);
    let mut y = x.matmul(&c).unwrap();
    y.data_mut().chunks_mut(2).for_each(|r| r[0] += 3.0);
    let m = ridge_fit(&x, &y, 1e-10).unwrap();
    for (a, b) in m.weights.data().iter().zip(c.data()) {
        assert!((a - b).abs() < 1e-6);
    }
    assert!((m.bias[0] - 3.0).abs() < 1e-6 && m.bias[1].abs() < 1e-6);
}

#[test]
fn ridge_large_penalty_predicts_mean() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let x = random(30, 4, &mut rng);
    let y = random(30, 1, &mut rng);
    let m = ridge_fit(&x, &y, 1e12).unwrap();
    let mean = y.data().iter().sum::<f64>() / 30.0;
    assert!(m.weights.data().iter().all(|w| w.abs() < 1e-9));
    assert!((m.bias[0] - mean).abs() < 1e-9);
    assert!(ridge_fit(&x, &y, 0.0).is_err());
}

#[test]
fn logreg_separates_and_converges() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let x = random(60, 3, &mut rng);
    let y: Vec<usize> = (0..60).map(|r| usize::from(x.get(r, 0) + 0.5 * x.get(r, 1) > 0.0)).collect();
    let fit = logreg_fit(&x, &y, 2, 1e-4, LogRegOptions::default()).unwrap();
    assert!(fit.grad_norm <= 1e-6, "grad {}", fit.grad_norm);
    assert_eq!(fit.model.classify(&x).unwrap(), y);
}

#[test]
fn logreg_heavy_penalty_is_uniform_on_balanced_data() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let x = random(20, 3, &mut rng);
    let y: Vec<usize> = (0..20).map(|i| i % 2).collect();
    let fit = logreg_fit(&x, &y, 2, 1e8, LogRegOptions::default()).unwrap();
    let p = class_probabilities(&fit.model, &x).unwrap();
    assert!(p.data().iter().all(|v| (v - 0.5).abs() < 1e-6));
}

#[test]
fn logreg_rejects_single_class() {
    let x = Tensor::zeros(4, 2);
    assert!(matches!(logreg_fit(&x, &[1, 1, 1, 1], 2, 1.0, LogRegOptions::default()), Err(Error::InvalidArgument(_))));
}

#[test]
fn stratified_folds_partition_and_balance() {
    let labels: Vec<usize> = (0..188).map(|i| usize::from(i < 63)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let folds = stratified_folds(&labels, 10, &mut rng).unwrap();
    let mut seen: Vec<usize> = folds.iter().flatten().copied().collect();
    seen.sort_unstable();
    assert_eq!(seen, (0..188).collect::<Vec<_>>());
    assert!(folds.iter().all(|f| f.len() == 18 || f.len() == 19));
    for f in &folds {
        let ones = f.iter().filter(|&&i| labels[i] == 1).count() as f64;
        assert!((ones - 63.0 / 10.0).abs() <= 1.0);
    }
    assert!(stratified_folds(&labels[..5], 10, &mut rng).is_err());
}

#[test]
fn majority_of_mutag_like_counts() {
    let labels: Vec<usize> = (0..188).map(|i| usize::from(i < 125)).collect();
    assert!((majority_baseline(&labels) - 125.0 / 188.0).abs() < 1e-12);
}

#[test]
fn cross_validation_is_deterministic_and_reports_both_regression_errors() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let x = random(50, 3, &mut rng);
    let y: Vec<usize> = (0..50).map(|r| usize::from(x.get(r, 2) > 0.0)).collect();
    let targets = ProbeTargets::Classes { labels: y, num_classes: 2 };
    let cfg = ProbeConfig { runs: 2, ..ProbeConfig::default() };
    let a = cross_validate_features(&x, &targets, &cfg).unwrap();
    let b = cross_validate_features(&x, &targets, &cfg).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.folds.len(), 20);
    assert!(a.mean > 0.85);

    let reg = ProbeTargets::Values(x.matmul(&Tensor::new(3, 1, vec![1.0, -2.0, 0.5]).unwrap()).unwrap());
    let r = cross_validate_features(&x, &reg, &cfg).unwrap();
    assert_eq!(r.task, ProbeTask::Regression);
    assert!(r.mean < 1e-2 && r.mae_mean.unwrap() < 1e-1);
}

#[test]
fn degenerate_folds_are_flagged_not_fatal() {
    let x = Tensor::new(6, 1, vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
    // One sample of class 1: the fold holding it trains on a single class.
    let targets = ProbeTargets::Classes { labels: vec![0, 0, 0, 0, 0, 1], num_classes: 2 };
    let cfg = ProbeConfig { folds: 2, runs: 1, lambdas: vec![1.0], ..ProbeConfig::default() };
    let r = cross_validate_features(&x, &targets, &cfg).unwrap();
    assert_eq!(r.folds.iter().filter(|f| f.degenerate.is_some()).count(), 1);
}
