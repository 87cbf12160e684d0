use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::linear::{logreg_fit, ridge_fit, LogRegOptions, Standardizer};
use crate::autodiff::Tensor;
use crate::error::{Error, Result};

/// Downstream labels aligned with embedding rows.
#[derive(Clone, Debug)]
pub enum ProbeTargets {
    Classes { labels: Vec<usize>, num_classes: usize },
    Values(Tensor),
}

impl ProbeTargets {
    pub fn len(&self) -> usize {
        match self {
            Self::Classes { labels, .. } => labels.len(),
            Self::Values(t) => t.rows(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProbeTask {
    Classification,
    Regression,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeConfig {
    pub folds: usize,
    pub runs: usize,
    pub seed: u64,
    /// Candidate penalties, chosen by inner cross-validation on each
    /// training split.
    pub lambdas: Vec<f64>,
    pub inner_folds: usize,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            folds: 10,
            runs: 5,
            seed: 0,
            lambdas: vec![1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2],
            inner_folds: 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub run: usize,
    pub fold: usize,
    pub train_size: usize,
    pub test_size: usize,
    pub lambda: f64,
    /// Accuracy for classification, mean squared error for regression.
    pub score: f64,
    pub mae: Option<f64>,
    /// Set when the fold was skipped.
    pub degenerate: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub task: ProbeTask,
    pub folds: Vec<FoldResult>,
    /// Mean and std of `score` over evaluated folds of all runs.
    pub mean: f64,
    pub std: f64,
    pub mae_mean: Option<f64>,
    /// Accuracy of always predicting the most frequent class.
    pub majority_baseline: Option<f64>,
    pub lambdas_used: Vec<f64>,
}

/// Deals each class's shuffled indices round-robin over the folds, with the
/// fold counter carried across classes.
pub fn stratified_folds(labels: &[usize], folds: usize, rng: &mut ChaCha8Rng) -> Result<Vec<Vec<usize>>> {
    check_folds(labels.len(), folds)?;
    let classes = labels.iter().copied().max().map_or(0, |m| m + 1);
    let mut out = vec![Vec::new(); folds];
    let mut next = 0;
    for c in 0..classes {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == c).collect();
        members.shuffle(rng);
        for i in members {
            out[next % folds].push(i);
            next += 1;
        }
    }
    out.iter_mut().for_each(|f| f.sort_unstable());
    Ok(out)
}

pub fn shuffled_folds(n: usize, folds: usize, rng: &mut ChaCha8Rng) -> Result<Vec<Vec<usize>>> {
    check_folds(n, folds)?;
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    let mut out = vec![Vec::new(); folds];
    for (k, i) in idx.into_iter().enumerate() {
        out[k % folds].push(i);
    }
    out.iter_mut().for_each(|f| f.sort_unstable());
    Ok(out)
}

fn check_folds(n: usize, folds: usize) -> Result<()> {
    if folds < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 folds, got {folds}")));
    }
    if n < folds {
        return Err(Error::InvalidArgument(format!("{n} samples cannot fill {folds} folds")));
    }
    Ok(())
}

pub fn majority_baseline(labels: &[usize]) -> f64 {
    if labels.is_empty() {
        return 0.0;
    }
    let classes = labels.iter().copied().max().unwrap_or(0) + 1;
    let mut counts = vec![0usize; classes];
    labels.iter().for_each(|&c| counts[c] += 1);
    *counts.iter().max().unwrap_or(&0) as f64 / labels.len() as f64
}

fn make_folds(targets: &ProbeTargets, subset: &[usize], folds: usize, rng: &mut ChaCha8Rng) -> Result<Vec<Vec<usize>>> {
    let local = match targets {
        ProbeTargets::Classes { labels, .. } => {
            let sub: Vec<usize> = subset.iter().map(|&i| labels[i]).collect();
            stratified_folds(&sub, folds, rng)?
        }
        ProbeTargets::Values(_) => shuffled_folds(subset.len(), folds, rng)?,
    };
    Ok(local.into_iter().map(|f| f.into_iter().map(|i| subset[i]).collect()).collect())
}

struct Scored {
    score: f64,
    mae: Option<f64>,
}

/// Fits on `train`, evaluates on `test`. Features are standardized with
/// training statistics.
fn fit_and_score(x: &Tensor, targets: &ProbeTargets, train: &[usize], test: &[usize], lambda: f64) -> Result<Scored> {
    let scaler = Standardizer::fit(&x.select_rows(train));
    let (xtr, xte) = (scaler.apply(&x.select_rows(train)), scaler.apply(&x.select_rows(test)));
    match targets {
        ProbeTargets::Classes { labels, num_classes } => {
            let ytr: Vec<usize> = train.iter().map(|&i| labels[i]).collect();
            let fit = logreg_fit(&xtr, &ytr, *num_classes, lambda, LogRegOptions::default())?;
            let pred = fit.model.classify(&xte)?;
            let hits = pred.iter().zip(test).filter(|(p, &i)| **p == labels[i]).count();
            Ok(Scored {
                score: hits as f64 / test.len() as f64,
                mae: None,
            })
        }
        ProbeTargets::Values(y) => {
            let model = ridge_fit(&xtr, &y.select_rows(train), lambda)?;
            let pred = model.predict(&xte)?;
            let truth = y.select_rows(test);
            let count = truth.len().max(1) as f64;
            let diffs = pred.data().iter().zip(truth.data()).map(|(a, b)| a - b);
            Ok(Scored {
                score: diffs.clone().map(|e| e * e).sum::<f64>() / count,
                mae: Some(diffs.map(f64::abs).sum::<f64>() / count),
            })
        }
    }
}

fn better(task: ProbeTask, a: f64, b: f64) -> bool {
    match task {
        ProbeTask::Classification => a > b,
        ProbeTask::Regression => a < b,
    }
}

fn select_lambda(x: &Tensor, targets: &ProbeTargets, train: &[usize], cfg: &ProbeConfig, rng: &mut ChaCha8Rng) -> f64 {
    let task = task_of(targets);
    let fallback = 1.0;
    if cfg.lambdas.len() == 1 || train.len() < cfg.inner_folds {
        return cfg.lambdas.first().copied().unwrap_or(fallback);
    }
    let Ok(inner) = make_folds(targets, train, cfg.inner_folds, rng) else {
        return fallback;
    };
    let mut best: Option<(f64, f64)> = None;
    for &lambda in &cfg.lambdas {
        let mut scores = Vec::new();
        for (k, test) in inner.iter().enumerate() {
            let fit: Vec<usize> = inner.iter().enumerate().filter(|&(j, _)| j != k).flat_map(|(_, f)| f.iter().copied()).collect();
            if let Ok(s) = fit_and_score(x, targets, &fit, test, lambda) {
                scores.push(s.score);
            }
        }
        if scores.is_empty() {
            continue;
        }
        let mean = scores.iter().sum::<f64>() / scores.len() as f64;
        // Ties go to the larger penalty.
        if best.is_none_or(|(_, b)| better(task, mean, b) || mean == b) {
            best = Some((lambda, mean));
        }
    }
    best.map_or(fallback, |(l, _)| l)
}

fn task_of(targets: &ProbeTargets) -> ProbeTask {
    match targets {
        ProbeTargets::Classes { .. } => ProbeTask::Classification,
        ProbeTargets::Values(_) => ProbeTask::Regression,
    }
}

/// Which training split the embeddings of a fold come from.
pub enum FeatureScope<'a> {
    /// Features shared by every fold of a run.
    Run(usize),
    /// Features for one fold, computed from its training indices only.
    Fold { run: usize, fold: usize, train: &'a [usize] },
}

/// Repeated k-fold probe. `features` is called once per run, or once per
/// fold when `per_fold` is set.
pub fn cross_validate_with<F>(targets: &ProbeTargets, cfg: &ProbeConfig, per_fold: bool, mut features: F) -> Result<ProbeReport>
where
    F: FnMut(FeatureScope<'_>) -> Result<Tensor>,
{
    if cfg.runs == 0 || cfg.lambdas.is_empty() {
        return Err(Error::InvalidArgument("need at least one run and one penalty".into()));
    }
    let n = targets.len();
    check_folds(n, cfg.folds)?;
    let task = task_of(targets);
    let all: Vec<usize> = (0..n).collect();
    let mut results = Vec::new();
    for run in 0..cfg.runs {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(run as u64));
        let folds = make_folds(targets, &all, cfg.folds, &mut rng)?;
        let shared = if per_fold { None } else { Some(features(FeatureScope::Run(run))?) };
        for (k, test) in folds.iter().enumerate() {
            let train: Vec<usize> = folds.iter().enumerate().filter(|&(j, _)| j != k).flat_map(|(_, f)| f.iter().copied()).collect();
            let x = match &shared {
                Some(x) => x.clone(),
                None => features(FeatureScope::Fold { run, fold: k, train: &train })?,
            };
            if x.rows() != n {
                return Err(Error::shape("cross_validate", &[n], &x.shape()));
            }
            let lambda = select_lambda(&x, targets, &train, cfg, &mut rng);
            let mut row = FoldResult {
                run,
                fold: k,
                train_size: train.len(),
                test_size: test.len(),
                lambda,
                score: f64::NAN,
                mae: None,
                degenerate: None,
            };
            match fit_and_score(&x, targets, &train, test, lambda) {
                Ok(s) => {
                    row.score = s.score;
                    row.mae = s.mae;
                }
                Err(Error::InvalidArgument(reason)) => {
                    row.degenerate = Some(Error::DegenerateFold { fold: k, reason }.to_string());
                }
                Err(e) => return Err(e),
            }
            results.push(row);
        }
    }
    let ok: Vec<&FoldResult> = results.iter().filter(|r| r.degenerate.is_none()).collect();
    if ok.is_empty() {
        return Err(Error::InvalidArgument("every fold was degenerate".into()));
    }
    let mean = ok.iter().map(|r| r.score).sum::<f64>() / ok.len() as f64;
    let std = (ok.iter().map(|r| (r.score - mean).powi(2)).sum::<f64>() / ok.len() as f64).sqrt();
    let mae_mean = (task == ProbeTask::Regression).then(|| ok.iter().filter_map(|r| r.mae).sum::<f64>() / ok.len() as f64);
    let majority_baseline = match targets {
        ProbeTargets::Classes { labels, .. } => Some(majority_baseline(labels)),
        ProbeTargets::Values(_) => None,
    };
    let mut lambdas_used: Vec<f64> = results.iter().map(|r| r.lambda).collect();
    lambdas_used.sort_by(f64::total_cmp);
    lambdas_used.dedup();
    Ok(ProbeReport {
        task,
        folds: results,
        mean,
        std,
        mae_mean,
        majority_baseline,
        lambdas_used,
    })
}

/// Repeated k-fold probe on fixed features.
pub fn cross_validate_features(x: &Tensor, targets: &ProbeTargets, cfg: &ProbeConfig) -> Result<ProbeReport> {
    cross_validate_with(targets, cfg, false, |_| Ok(x.clone()))
}
