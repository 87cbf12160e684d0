use crate::autodiff::Tensor;
use crate::error::{Error, Result};
use crate::linalg::{gram, spd_solve, xty};

/// Column statistics of a training split.
#[derive(Clone, Debug)]
pub struct Standardizer {
    mean: Vec<f64>,
    scale: Vec<f64>,
}

impl Standardizer {
    /// Zero-variance columns keep unit scale.
    pub fn fit(x: &Tensor) -> Self {
        let n = x.rows().max(1) as f64;
        let mut mean = vec![0.0; x.cols()];
        for r in 0..x.rows() {
            for (m, v) in mean.iter_mut().zip(x.row_slice(r)) {
                *m += v / n;
            }
        }
        let mut var = vec![0.0; x.cols()];
        for r in 0..x.rows() {
            for ((s, v), m) in var.iter_mut().zip(x.row_slice(r)).zip(&mean) {
                *s += (v - m).powi(2) / n;
            }
        }
        let scale = var.into_iter().map(|v| if v > 1e-24 { v.sqrt() } else { 1.0 }).collect();
        Self { mean, scale }
    }

    pub fn apply(&self, x: &Tensor) -> Tensor {
        let mut out = x.clone();
        for r in 0..out.rows() {
            for ((v, m), s) in out.row_slice_mut(r).iter_mut().zip(&self.mean).zip(&self.scale) {
                *v = (*v - m) / s;
            }
        }
        out
    }
}

/// Affine model `X W + b`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearModel {
    pub weights: Tensor,
    pub bias: Vec<f64>,
}

impl LinearModel {
    pub fn predict(&self, x: &Tensor) -> Result<Tensor> {
        let mut out = x.matmul(&self.weights)?;
        for r in 0..out.rows() {
            for (v, b) in out.row_slice_mut(r).iter_mut().zip(&self.bias) {
                *v += b;
            }
        }
        Ok(out)
    }

    /// Arg-max class per row.
    pub fn classify(&self, x: &Tensor) -> Result<Vec<usize>> {
        let scores = self.predict(x)?;
        Ok((0..scores.rows())
            .map(|r| {
                let row = scores.row_slice(r);
                (0..row.len()).fold(0, |best, c| if row[c] > row[best] { c } else { best })
            })
            .collect())
    }
}

/// `min ‖XW + 1b − Y‖² + λ‖W‖²` with an unpenalized bias, solved in closed
/// form on centered data.
pub fn ridge_fit(x: &Tensor, y: &Tensor, lambda: f64) -> Result<LinearModel> {
    if x.rows() != y.rows() || x.rows() == 0 {
        return Err(Error::shape("ridge_fit", &x.shape(), &y.shape()));
    }
    if !(lambda > 0.0) {
        return Err(Error::InvalidArgument(format!("ridge penalty must be > 0, got {lambda}")));
    }
    let n = x.rows() as f64;
    let col_mean = |t: &Tensor| -> Vec<f64> {
        (0..t.cols()).map(|c| (0..t.rows()).map(|r| t.get(r, c)).sum::<f64>() / n).collect()
    };
    let (xm, ym) = (col_mean(x), col_mean(y));
    let center = |t: &Tensor, m: &[f64]| {
        let mut out = t.clone();
        for r in 0..out.rows() {
            for (v, mu) in out.row_slice_mut(r).iter_mut().zip(m) {
                *v -= mu;
            }
        }
        out
    };
    let (xc, yc) = (center(x, &xm), center(y, &ym));
    let mut a = gram(&xc);
    for i in 0..a.rows() {
        a.set(i, i, a.get(i, i) + lambda);
    }
    let weights = spd_solve(&a, &xty(&xc, &yc)?)?;
    let bias = (0..y.cols())
        .map(|t| ym[t] - (0..x.cols()).map(|j| xm[j] * weights.get(j, t)).sum::<f64>())
        .collect();
    Ok(LinearModel { weights, bias })
}

#[derive(Clone, Copy, Debug)]
pub struct LogRegOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for LogRegOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iter: 5000,
        }
    }
}

#[derive(Clone, Debug)]
pub struct LogRegFit {
    pub model: LinearModel,
    pub iterations: usize,
    pub grad_norm: f64,
    pub objective: f64,
}

/// Mean multinomial cross-entropy plus `λ‖W‖²` and its gradient with respect
/// to the packed parameters `[W (d×c) row-major, b (c)]`.
fn logreg_objective(x: &Tensor, y: &[usize], c: usize, lambda: f64, theta: &[f64], grad: &mut [f64]) -> f64 {
    let (n, d) = (x.rows(), x.cols());
    let (w, b) = theta.split_at(d * c);
    grad.fill(0.0);
    let (gw, gb) = grad.split_at_mut(d * c);
    let mut loss = 0.0;
    let mut logits = vec![0.0; c];
    for r in 0..n {
        let row = x.row_slice(r);
        logits.copy_from_slice(b);
        for (j, &xj) in row.iter().enumerate() {
            if xj != 0.0 {
                for (l, wv) in logits.iter_mut().zip(&w[j * c..(j + 1) * c]) {
                    *l += xj * wv;
                }
            }
        }
        let top = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = logits.iter().map(|l| (l - top).exp()).sum();
        loss += top + z.ln() - logits[y[r]];
        for k in 0..c {
            let resid = ((logits[k] - top).exp() / z - f64::from(u8::from(k == y[r]))) / n as f64;
            gb[k] += resid;
            for (j, &xj) in row.iter().enumerate() {
                gw[j * c + k] += resid * xj;
            }
        }
    }
    let mut penalty = 0.0;
    for (g, &wv) in gw.iter_mut().zip(w) {
        penalty += wv * wv;
        *g += 2.0 * lambda * wv;
    }
    loss / n as f64 + lambda * penalty
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// L2-regularized multinomial logistic regression by gradient descent with
/// Barzilai-Borwein steps and Armijo backtracking.
pub fn logreg_fit(x: &Tensor, y: &[usize], num_classes: usize, lambda: f64, opts: LogRegOptions) -> Result<LogRegFit> {
    if x.rows() != y.len() || x.rows() == 0 {
        return Err(Error::shape("logreg_fit", &x.shape(), &[y.len()]));
    }
    if !(lambda >= 0.0) {
        return Err(Error::InvalidArgument(format!("penalty must be >= 0, got {lambda}")));
    }
    if let Some(&bad) = y.iter().find(|&&c| c >= num_classes) {
        return Err(Error::InvalidArgument(format!("label {bad} outside [0, {num_classes})")));
    }
    let mut present = vec![false; num_classes];
    y.iter().for_each(|&c| present[c] = true);
    if present.iter().filter(|&&p| p).count() < 2 {
        return Err(Error::InvalidArgument("need at least two classes present".into()));
    }
    let (d, c) = (x.cols(), num_classes);
    let size = d * c + c;
    let mut theta = vec![0.0; size];
    let mut grad = vec![0.0; size];
    let mut f = logreg_objective(x, y, c, lambda, &theta, &mut grad);
    let mut step = 1.0;
    let mut trial = vec![0.0; size];
    let mut trial_grad = vec![0.0; size];
    let mut iterations = 0;
    while iterations < opts.max_iter && norm(&grad) > opts.tol {
        let g2: f64 = grad.iter().map(|g| g * g).sum();
        let mut f_new;
        loop {
            for ((t, &th), &g) in trial.iter_mut().zip(&theta).zip(&grad) {
                *t = th - step * g;
            }
            f_new = logreg_objective(x, y, c, lambda, &trial, &mut trial_grad);
            if f_new <= f - 1e-4 * step * g2 || step < 1e-20 {
                break;
            }
            step *= 0.5;
        }
        let (mut ss, mut sy) = (0.0, 0.0);
        for i in 0..size {
            let s = trial[i] - theta[i];
            ss += s * s;
            sy += s * (trial_grad[i] - grad[i]);
        }
        std::mem::swap(&mut theta, &mut trial);
        std::mem::swap(&mut grad, &mut trial_grad);
        f = f_new;
        step = if sy > 0.0 { (ss / sy).clamp(1e-10, 1e10) } else { 1.0 };
        iterations += 1;
    }
    let weights = Tensor::new(d, c, theta[..d * c].to_vec())?;
    Ok(LogRegFit {
        model: LinearModel {
            weights,
            bias: theta[d * c..].to_vec(),
        },
        iterations,
        grad_norm: norm(&grad),
        objective: f,
    })
}

/// Softmax probabilities of a fitted model.
pub fn class_probabilities(model: &LinearModel, x: &Tensor) -> Result<Tensor> {
    let mut p = model.predict(x)?;
    for r in 0..p.rows() {
        let row = p.row_slice_mut(r);
        let top = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut z = 0.0;
        for v in row.iter_mut() {
            *v = (*v - top).exp();
            z += *v;
        }
        row.iter_mut().for_each(|v| *v /= z);
    }
    Ok(p)
}
