use super::tape::{Op, Var};
use crate::error::{Error, Result};

/// Mean smooth-L1 (Huber-style) loss over all elements.
///
/// Per element: `0.5 * d^2 / beta` when `|d| < beta`, else `|d| - 0.5 * beta`.
pub fn smooth_l1<'t>(pred: &Var<'t>, target: &Var<'t>, beta: f64) -> Result<Var<'t>> {
    if !(beta > 0.0) {
        return Err(Error::InvalidArgument(format!("smooth_l1 beta must be > 0, got {beta}")));
    }
    if !std::ptr::eq(pred.tape, target.tape) {
        return Err(Error::InvalidArgument("smooth_l1: operands live on different tapes".into()));
    }
    let (value, rg) = {
        let p = pred.value();
        let t = target.value();
        if p.shape() != t.shape() {
            return Err(Error::shape("smooth_l1", &p.shape(), &t.shape()));
        }
        if cfg!(debug_assertions) && (p.data().iter().chain(t.data()).any(|v| v.is_nan())) {
            return Err(Error::NonFinite("smooth_l1"));
        }
        let total: f64 = p
            .data()
            .iter()
            .zip(t.data())
            .map(|(&a, &b)| smooth_l1_element(a - b, beta))
            .sum();
        (
            total / p.len().max(1) as f64,
            pred.requires_grad() || target.requires_grad(),
        )
    };
    Ok(pred.tape.push(
        super::Tensor::scalar(value),
        Op::SmoothL1 {
            pred: pred.id,
            target: target.id,
            beta,
        },
        rg,
    ))
}

/// Loss contribution of a single difference.
pub fn smooth_l1_element(diff: f64, beta: f64) -> f64 {
    let a = diff.abs();
    if a < beta {
        0.5 * a * a / beta
    } else {
        a - 0.5 * beta
    }
}
