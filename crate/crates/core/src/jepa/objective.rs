use serde::{Deserialize, Serialize};

use crate::autodiff::{smooth_l1, Axis, Tensor, Var};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossKind {
    /// Predict `(cosh a, sinh a)` of the target's mean activation.
    Hyperbola,
    /// Smooth-L1 directly between predicted and target latents.
    Euclidean,
    /// Poincaré-ball geodesic distance between latents.
    Poincare,
}

impl std::str::FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hyperbola" => Ok(Self::Hyperbola),
            "euclidean" => Ok(Self::Euclidean),
            "poincare" => Ok(Self::Poincare),
            other => Err(Error::InvalidArgument(format!("unknown loss kind '{other}'"))),
        }
    }
}

impl std::fmt::Display for LossKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Hyperbola => "hyperbola",
            Self::Euclidean => "euclidean",
            Self::Poincare => "poincare",
        })
    }
}

/// Angle per target row and its point `(cosh a, sinh a)` on the unit hyperbola.
#[derive(Clone, Debug)]
pub struct HyperbolicTarget {
    pub alpha: Vec<f64>,
    pub psi: Tensor,
}

/// Row means of `z_y` mapped onto the hyperbola.
pub fn hyperbolic_target(z_y: &Tensor) -> HyperbolicTarget {
    let d = z_y.cols().max(1) as f64;
    let alpha: Vec<f64> = (0..z_y.rows()).map(|r| z_y.row_slice(r).iter().sum::<f64>() / d).collect();
    let psi = alpha.iter().flat_map(|&a| [a.cosh(), a.sinh()]).collect();
    HyperbolicTarget {
        psi: Tensor::new(alpha.len(), 2, psi).expect("two coordinates per angle"),
        alpha,
    }
}

/// Differentiable counterpart of [`hyperbolic_target`], used when the
/// target branch is co-trained.
pub fn hyperbolic_target_var<'t>(z_y: &Var<'t>) -> Result<Var<'t>> {
    let alpha = z_y.mean(Axis::Cols)?;
    z_y.tape().concat(&[alpha.cosh()?, alpha.sinh()?], Axis::Cols)
}

/// Smooth-L1 between predicted and target coordinates, averaged over
/// targets and both coordinates.
pub fn jepa_loss<'t>(psi_hat: &Var<'t>, target: &HyperbolicTarget, beta: f64) -> Result<Var<'t>> {
    let t = psi_hat.tape().constant(target.psi.clone());
    smooth_l1(psi_hat, &t, beta)
}

pub fn alt_loss_euclidean<'t>(z_pred: &Var<'t>, z_y: &Var<'t>, beta: f64) -> Result<Var<'t>> {
    smooth_l1(z_pred, z_y, beta)
}

/// Poincaré loss plus how many rows hit the boundary clamp.
pub struct PoincareLoss<'t> {
    pub loss: Var<'t>,
    pub clamped: usize,
}

pub const POINCARE_MAX_NORM: f64 = 1.0 - 1e-5;
const ACOSH_FLOOR: f64 = 1.0 + 1e-15;

/// `x / (1 + |x|)`, which lands strictly inside the unit ball.
fn to_ball<'t>(x: &Var<'t>) -> Result<Var<'t>> {
    let norm = x.square()?.sum(Axis::Cols)?.add_scalar(1e-24)?.sqrt()?;
    x.div(&norm.add_scalar(1.0)?)
}

/// Mean geodesic distance `acosh(1 + 2|u-v|^2 / ((1-|u|^2)(1-|v|^2)))` after
/// mapping both inputs into the ball. Squared norms are clamped below
/// `POINCARE_MAX_NORM^2`.
pub fn alt_loss_poincare<'t>(u: &Var<'t>, v: &Var<'t>) -> Result<PoincareLoss<'t>> {
    if u.shape() != v.shape() {
        return Err(Error::shape("poincare", &u.shape(), &v.shape()));
    }
    let (bu, bv) = (to_ball(u)?, to_ball(v)?);
    let (nu, nv) = (bu.square()?.sum(Axis::Cols)?, bv.square()?.sum(Axis::Cols)?);
    let limit = POINCARE_MAX_NORM * POINCARE_MAX_NORM;
    let clamped = nu
        .value()
        .data()
        .iter()
        .chain(nv.value().data())
        .filter(|&&n| n > limit)
        .count();
    let gap = 1.0 - limit;
    let du = nu.affine(-1.0, 1.0)?.clamp_min(gap)?;
    let dv = nv.affine(-1.0, 1.0)?.clamp_min(gap)?;
    let diff = bu.sub(&bv)?.square()?.sum(Axis::Cols)?;
    let arg = diff.scale(2.0)?.div(&du.mul(&dv)?)?.add_scalar(1.0)?;
    let loss = arg.clamp_min(ACOSH_FLOOR)?.acosh()?.mean_all()?;
    Ok(PoincareLoss { loss, clamped })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::Tape;

    #[test]
    fn zero_and_unit_rows() {
        let t = hyperbolic_target(&Tensor::zeros(1, 4));
        assert_eq!(t.alpha, vec![0.0]);
        assert_eq!(t.psi.data(), &[1.0, 0.0]);
        let t = hyperbolic_target(&Tensor::full(1, 3, 1.0));
        assert!((t.psi.get(0, 0) - 1.5430806348152437).abs() < 1e-12);
        assert!((t.psi.get(0, 1) - 1.1752011936438014).abs() < 1e-12);
        let neg = hyperbolic_target(&Tensor::full(1, 3, -1.0));
        assert_eq!(neg.psi.get(0, 0), t.psi.get(0, 0));
        assert_eq!(neg.psi.get(0, 1), -t.psi.get(0, 1));
    }

    #[test]
    fn loss_table() {
        let tape = Tape::new();
        let target = hyperbolic_target(&Tensor::zeros(1, 2));
        let exact = tape.constant(target.psi.clone());
        assert_eq!(jepa_loss(&exact, &target, 1.0).unwrap().item(), 0.0);
        let off = tape.constant(Tensor::row(&[3.0, 0.0]));
        assert_eq!(jepa_loss(&off, &target, 1.0).unwrap().item(), 0.75);
    }

    #[test]
    fn euclidean_variant() {
        let tape = Tape::new();
        let a = tape.constant(Tensor::row(&[1.0, 2.0]));
        assert_eq!(alt_loss_euclidean(&a, &a, 1.0).unwrap().item(), 0.0);
        let b = tape.constant(Tensor::row(&[1.0, 2.0, 3.0]));
        assert!(alt_loss_euclidean(&a, &b, 1.0).is_err());
        let far = tape.constant(Tensor::row(&[101.0, 2.0]));
        let far2 = tape.constant(Tensor::row(&[201.0, 2.0]));
        let l1 = alt_loss_euclidean(&far, &a, 1.0).unwrap().item();
        let l2 = alt_loss_euclidean(&far2, &a, 1.0).unwrap().item();
        assert!((l2 - l1 - 50.0).abs() < 1e-12);
    }

    #[test]
    fn poincare_values() {
        let tape = Tape::new();
        let u = tape.constant(Tensor::row(&[0.3, -0.2, 0.1]));
        let same = alt_loss_poincare(&u, &u).unwrap();
        assert!(same.loss.item() < 1e-6);
        // 1.0 maps to 0.5 inside the ball.
        let origin = tape.constant(Tensor::row(&[0.0, 0.0]));
        let half = tape.constant(Tensor::row(&[1.0, 0.0]));
        let l = alt_loss_poincare(&origin, &half).unwrap();
        assert!((l.loss.item() - (5.0f64 / 3.0).acosh()).abs() < 1e-9);
        assert_eq!(l.clamped, 0);
        let huge = tape.constant(Tensor::row(&[1e7, 0.0]));
        assert_eq!(alt_loss_poincare(&huge, &origin).unwrap().clamped, 1);
    }
}
